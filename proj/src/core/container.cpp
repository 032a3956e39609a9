#include "fqf/core/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "fqf/core/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace fqf {

namespace {

constexpr char kMagic[4] = {'F', 'Q', 'F', '1'};

bool reserved_key(std::string_view k) { return k == "dtype" || k == "count"; }

template <typename T>
Payload bytes_of(std::span<const T> v, Dtype d) {
  Payload p;
  p.dtype = d;
  p.bytes.resize(v.size_bytes());
  if (!v.empty()) std::memcpy(p.bytes.data(), v.data(), v.size_bytes());
  return p;
}

template <typename T>
std::vector<T> typed_of(const Payload& p, Dtype expect) {
  require(p.dtype == expect, "payload holds ", dtype_name(p.dtype), ", expected ",
          dtype_name(expect));
  std::vector<T> out(p.count());
  if (!out.empty()) std::memcpy(out.data(), p.bytes.data(), p.bytes.size());
  return out;
}

}  // namespace

std::string_view dtype_name(Dtype d) {
  switch (d) {
    case Dtype::f32: return "f32";
    case Dtype::f64: return "f64";
    case Dtype::c64: return "c64";
    case Dtype::c128: return "c128";
    case Dtype::u8: return "u8";
  }
  fail("corrupt dtype tag");
}

std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::f32: return 4;
    case Dtype::f64: return 8;
    case Dtype::c64: return 8;
    case Dtype::c128: return 16;
    case Dtype::u8: return 1;
  }
  fail("corrupt dtype tag");
}

Dtype parse_dtype(std::string_view name) {
  if (name == "f32") return Dtype::f32;
  if (name == "f64") return Dtype::f64;
  if (name == "c64") return Dtype::c64;
  if (name == "c128") return Dtype::c128;
  if (name == "u8") return Dtype::u8;
  fail("unknown dtype '", name, "'");
}

const std::string* find_header(const ContainerHeader& h, std::string_view key) {
  for (const auto& [k, v] : h)
    if (k == key) return &v;
  return nullptr;
}

const std::string& header_value(const ContainerHeader& h, std::string_view key) {
  const std::string* v = find_header(h, key);
  require(v != nullptr, "missing header key '", key, "'");
  return *v;
}

Payload make_payload(std::span<const float> v) { return bytes_of(v, Dtype::f32); }
Payload make_payload(std::span<const double> v) { return bytes_of(v, Dtype::f64); }
Payload make_payload(std::span<const std::complex<float>> v) { return bytes_of(v, Dtype::c64); }
Payload make_payload(std::span<const std::complex<double>> v) { return bytes_of(v, Dtype::c128); }
Payload make_payload(std::span<const std::uint8_t> v) { return bytes_of(v, Dtype::u8); }

std::vector<float> as_f32(const Payload& p) { return typed_of<float>(p, Dtype::f32); }
std::vector<double> as_f64(const Payload& p) { return typed_of<double>(p, Dtype::f64); }
std::vector<std::complex<float>> as_c64(const Payload& p) {
  return typed_of<std::complex<float>>(p, Dtype::c64);
}
std::vector<std::complex<double>> as_c128(const Payload& p) {
  return typed_of<std::complex<double>>(p, Dtype::c128);
}
std::vector<std::uint8_t> as_u8(const Payload& p) { return typed_of<std::uint8_t>(p, Dtype::u8); }

std::vector<double> as_real_f64(const Payload& p) {
  if (p.dtype == Dtype::f64) return as_f64(p);
  std::vector<float> narrow = as_f32(p);
  return {narrow.begin(), narrow.end()};
}

std::vector<std::complex<double>> as_complex_f64(const Payload& p) {
  if (p.dtype == Dtype::c128) return as_c128(p);
  std::vector<std::complex<float>> narrow = as_c64(p);
  std::vector<std::complex<double>> out(narrow.size());
  for (std::size_t i = 0; i < narrow.size(); ++i) out[i] = narrow[i];
  return out;
}

void write_container(const std::string& path, const ContainerHeader& header,
                     const Payload& payload) {
  std::string block;
  block += "dtype=";
  block += dtype_name(payload.dtype);
  block += '\n';
  block += "count=" + std::to_string(payload.count()) + '\n';
  for (const auto& [k, v] : header) {
    require(!k.empty(), "empty header key");
    require(!reserved_key(k), "header key '", k, "' is reserved");
    require(k.find('=') == std::string::npos && k.find('\n') == std::string::npos,
            "header key '", k, "' contains a delimiter");
    require(v.find('\n') == std::string::npos, "header value for '", k, "' contains a newline");
    block += k;
    block += '=';
    block += v;
    block += '\n';
  }
  require(block.size() <= 0xffffffffull, "header too large");

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), "cannot open '", path, "' for writing");
  f.write(kMagic, 4);
  std::uint32_t len = static_cast<std::uint32_t>(block.size());
  f.write(reinterpret_cast<const char*>(&len), 4);
  f.write(block.data(), static_cast<std::streamsize>(block.size()));
  f.write(reinterpret_cast<const char*>(payload.bytes.data()),
          static_cast<std::streamsize>(payload.bytes.size()));
  f.flush();
  require(f.good(), "write to '", path, "' failed");
}

namespace {

struct Parsed {
  ContainerHeader full;
  Dtype dtype;
  std::size_t count;
};

Parsed parse_header_block(const std::string& block, const std::string& path) {
  Parsed out;
  const std::string* dtype_str = nullptr;
  const std::string* count_str = nullptr;
  std::size_t pos = 0;
  while (pos < block.size()) {
    std::size_t eol = block.find('\n', pos);
    require(eol != std::string::npos, path, ": unterminated header line");
    std::string_view line(block.data() + pos, eol - pos);
    std::size_t eq = line.find('=');
    require(eq != std::string_view::npos, path, ": header line without '='");
    out.full.emplace_back(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
    pos = eol + 1;
  }
  for (const auto& [k, v] : out.full) {
    if (k == "dtype") dtype_str = &v;
    if (k == "count") count_str = &v;
  }
  require(dtype_str != nullptr, path, ": header lacks dtype");
  require(count_str != nullptr, path, ": header lacks count");
  out.dtype = parse_dtype(*dtype_str);
  try {
    out.count = std::stoull(*count_str);
  } catch (const std::exception&) {
    fail(path, ": bad count '", *count_str, "'");
  }
  return out;
}

}  // namespace

std::pair<ContainerHeader, Payload> read_container(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "cannot open '", path, "'");
  char magic[4] = {};
  f.read(magic, 4);
  require(f.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0, path, ": bad magic");
  std::uint32_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 4);
  require(f.gcount() == 4, path, ": truncated header length");
  std::string block(len, '\0');
  f.read(block.data(), len);
  require(static_cast<std::uint32_t>(f.gcount()) == len, path, ": truncated header");

  Parsed meta = parse_header_block(block, path);
  Payload payload;
  payload.dtype = meta.dtype;
  std::size_t want = meta.count * dtype_size(meta.dtype);
  payload.bytes.resize(want);
  f.read(reinterpret_cast<char*>(payload.bytes.data()), static_cast<std::streamsize>(want));
  require(static_cast<std::size_t>(f.gcount()) == want, path,
          ": payload truncated (header claims ", want, " bytes)");
  f.peek();
  require(f.eof(), path, ": trailing bytes after payload");

  ContainerHeader user;
  for (auto& kv : meta.full)
    if (!reserved_key(kv.first)) user.push_back(std::move(kv));
  return {std::move(user), std::move(payload)};
}

ContainerHeader read_container_header(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "cannot open '", path, "'");
  char magic[4] = {};
  f.read(magic, 4);
  require(f.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0, path, ": bad magic");
  std::uint32_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 4);
  require(f.gcount() == 4, path, ": truncated header length");
  std::string block(len, '\0');
  f.read(block.data(), len);
  require(static_cast<std::uint32_t>(f.gcount()) == len, path, ": truncated header");
  return parse_header_block(block, path).full;
}

}  // namespace fqf
