#pragma once

// Fashion-MNIST download: gzip'd IDX files over plain HTTP, inflated and
// checked against the published uncompressed sizes before anything is
// written to the cache directory.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include <httplib.h>

#include "ddlab/data.hpp"

namespace ddlab::fetch {

inline constexpr const char* kFashionMnistHost = "http://fashion-mnist.s3-website.eu-central-1.amazonaws.com";

inline std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> in) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw Error("zlib initialisation failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf;
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      const auto at = zs.total_in;
      inflateEnd(&zs);
      throw FormatError("corrupt gzip stream", at);
    }
    out.insert(out.end(), buf, buf + (sizeof buf - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      const auto at = zs.total_in;
      inflateEnd(&zs);
      throw FormatError("gzip stream truncated", at);
    }
  }
  inflateEnd(&zs);
  return out;
}

/// The inflated payload must have the published size and parse as IDX.
inline void verify_payload(const IdxFileInfo& info, std::span<const std::uint8_t> bytes) {
  if (bytes.size() != info.size_bytes)
    throw FormatError(std::string(info.name) + ": expected " + std::to_string(info.size_bytes) + " bytes, got " +
                          std::to_string(bytes.size()),
                      bytes.size());
  (void)parse_idx(bytes);
}

inline std::vector<std::uint8_t> http_get(const std::string& host, const std::string& path) {
  httplib::Client client(host);
  client.set_follow_location(true);
  client.set_connection_timeout(30);
  client.set_read_timeout(120);
  auto res = client.Get(path);
  if (!res) throw DataError("download failed: " + host + path + " (" + httplib::to_string(res.error()) + ")");
  if (res->status != 200)
    throw DataError("download failed: " + host + path + " (HTTP " + std::to_string(res->status) + ")");
  return {res->body.begin(), res->body.end()};
}

/// Download, inflate, verify and store all four files. Files already present
/// with the right size are kept.
inline void fetch_fashion_mnist(const std::filesystem::path& dir, const std::string& host, std::ostream& log) {
  std::filesystem::create_directories(dir);
  for (const auto& info : kFashionMnistFiles) {
    const auto target = dir / std::string(info.name);
    if (std::filesystem::exists(target) && std::filesystem::file_size(target) == info.size_bytes) {
      log << "present: " << target.string() << '\n';
      continue;
    }
    const std::string path = "/" + std::string(info.name) + ".gz";
    log << "fetching " << host << path << '\n';
    const auto raw = gunzip(http_get(host, path));
    verify_payload(info, raw);
    const auto tmp = target.string() + ".part";
    {
      std::ofstream out(tmp, std::ios::binary);
      out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
      if (!out) throw DataError("cannot write " + tmp);
    }
    std::filesystem::rename(tmp, target);
    log << "wrote " << target.string() << " (" << raw.size() << " bytes)\n";
  }
}

}  // namespace ddlab::fetch
