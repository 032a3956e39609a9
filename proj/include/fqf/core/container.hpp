#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fqf {

// Binary container: 4-byte magic "FQF1", u32 little-endian header length,
// UTF-8 "key=value\n" header lines, then the raw little-endian payload.
// The writer injects reserved keys dtype and count; the reader validates
// them against the payload and strips them, so write -> read is an identity
// on (header, payload).

enum class Dtype : std::uint8_t { f32, f64, c64, c128, u8 };

std::string_view dtype_name(Dtype d);
std::size_t dtype_size(Dtype d);
Dtype parse_dtype(std::string_view name);

using ContainerHeader = std::vector<std::pair<std::string, std::string>>;

const std::string* find_header(const ContainerHeader& h, std::string_view key);
const std::string& header_value(const ContainerHeader& h, std::string_view key);

struct Payload {
  Dtype dtype = Dtype::u8;
  std::vector<std::byte> bytes;

  std::size_t count() const { return bytes.size() / dtype_size(dtype); }
};

Payload make_payload(std::span<const float> v);
Payload make_payload(std::span<const double> v);
Payload make_payload(std::span<const std::complex<float>> v);
Payload make_payload(std::span<const std::complex<double>> v);
Payload make_payload(std::span<const std::uint8_t> v);

std::vector<float> as_f32(const Payload& p);
std::vector<double> as_f64(const Payload& p);
std::vector<std::complex<float>> as_c64(const Payload& p);
std::vector<std::complex<double>> as_c128(const Payload& p);
std::vector<std::uint8_t> as_u8(const Payload& p);

// Widening reads: accept either float width and return doubles.
std::vector<double> as_real_f64(const Payload& p);
std::vector<std::complex<double>> as_complex_f64(const Payload& p);

void write_container(const std::string& path, const ContainerHeader& header,
                     const Payload& payload);
std::pair<ContainerHeader, Payload> read_container(const std::string& path);
ContainerHeader read_container_header(const std::string& path);

}  // namespace fqf
