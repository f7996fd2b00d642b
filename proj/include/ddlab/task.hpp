#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "ddlab/data.hpp"

namespace ddlab {

struct SyntheticTaskConfig {
  Eigen::Index input_dim = 20;
  int num_classes = 10;
  Eigen::Index teacher_dim = 50;
  std::uint64_t teacher_seed = 0x7eac4e5ULL;
};

/// Where clean train and test samples come from: a synthetic teacher task,
/// or fixed pools (Fashion-MNIST) that are subsampled.
class TaskSource {
public:
  static TaskSource synthetic(const SyntheticTaskConfig& cfg) {
    TaskSource t;
    t.name_ = "synthetic";
    t.synthetic_ = cfg;
    t.teacher_ = std::make_shared<const Teacher>(
        make_teacher(cfg.input_dim, cfg.teacher_dim, cfg.num_classes, cfg.teacher_seed));
    return t;
  }

  static TaskSource from_pools(std::string name, std::shared_ptr<const Dataset> train,
                               std::shared_ptr<const Dataset> test) {
    if (!train || !test) throw InputError("dataset pools must not be null");
    if (train->input_dim() != test->input_dim() || train->num_classes != test->num_classes)
      throw InputError("train and test pools disagree on shape");
    TaskSource t;
    t.name_ = std::move(name);
    t.train_pool_ = std::move(train);
    t.test_pool_ = std::move(test);
    return t;
  }

  const std::string& name() const { return name_; }
  bool is_synthetic() const { return teacher_ != nullptr; }
  const std::optional<SyntheticTaskConfig>& synthetic_config() const { return synthetic_; }
  const Teacher* teacher() const { return teacher_.get(); }

  Eigen::Index input_dim() const { return teacher_ ? synthetic_->input_dim : train_pool_->input_dim(); }
  int num_classes() const { return teacher_ ? synthetic_->num_classes : train_pool_->num_classes; }

  /// Largest train set this source can supply (unbounded for synthetic tasks).
  std::optional<Eigen::Index> train_capacity() const {
    if (teacher_) return std::nullopt;
    return train_pool_->size();
  }
  std::optional<Eigen::Index> test_capacity() const {
    if (teacher_) return std::nullopt;
    return test_pool_->size();
  }

  /// n clean training samples, a pure function of (n, seed).
  Dataset draw_train(Eigen::Index n, std::uint64_t seed) const {
    if (teacher_) return make_synthetic(synthetic_->input_dim, n, synthetic_->num_classes, *teacher_, seed);
    return subsample(*train_pool_, n, seed);
  }

  /// n held-out samples, never noised.
  Dataset draw_test(Eigen::Index n, std::uint64_t seed) const {
    if (teacher_)
      return make_synthetic(synthetic_->input_dim, n, synthetic_->num_classes, *teacher_,
                            derive_seed(seed, {role_tag("test")}));
    return subsample(*test_pool_, n, seed);
  }

private:
  TaskSource() = default;

  std::string name_;
  std::optional<SyntheticTaskConfig> synthetic_;
  std::shared_ptr<const Teacher> teacher_;
  std::shared_ptr<const Dataset> train_pool_;
  std::shared_ptr<const Dataset> test_pool_;
};

}  // namespace ddlab
