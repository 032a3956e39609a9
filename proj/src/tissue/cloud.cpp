#include "fqf/tissue/cloud.hpp"

#include <cmath>
#include <cstring>

#include "fqf/core/container.hpp"
#include "fqf/core/error.hpp"

namespace fqf::tissue {

namespace {

constexpr double kDensityCalibration = 15.0;

}  // namespace

std::size_t cloud_count(const Box& region, double wavelength, double per_lambda2_density) {
  require(wavelength > 0.0, "wavelength must be positive");
  require(per_lambda2_density >= 0.0, "density must be non-negative");
  double per_volume =
      per_lambda2_density / (kDensityCalibration * wavelength * wavelength * wavelength);
  return static_cast<std::size_t>(std::llround(region.volume() * per_volume));
}

ScattererCloud generate_cloud(const Box& region, double wavelength, double per_lambda2_density,
                              ReflectivityLaw law, RngSeed seed, std::size_t max_count) {
  std::size_t n = cloud_count(region, wavelength, per_lambda2_density);
  require(n <= max_count, "cloud of ", n, " scatterers exceeds the cap of ", max_count);

  ScattererCloud cloud;
  cloud.positions.resize(n);
  cloud.reflectivity.resize(n);
  cloud.label.assign(n, Label::tissue);

  CounterRng pos_rng(seed, "cloud-positions");
  CounterRng amp_rng(seed, "cloud-reflectivity");
  const double root3 = std::sqrt(3.0);
  for (std::size_t i = 0; i < n; ++i) {
    cloud.positions[i] = {pos_rng.uniform(region.lo.x, region.hi.x),
                          pos_rng.uniform(region.lo.y, region.hi.y),
                          pos_rng.uniform(region.lo.z, region.hi.z)};
    cloud.reflectivity[i] = law == ReflectivityLaw::gaussian
                                ? amp_rng.normal()
                                : amp_rng.uniform(-root3, root3);
  }
  return cloud;
}

void apply_blood_contrast(ScattererCloud& cloud, double contrast_db) {
  double amp = std::pow(10.0, contrast_db / 20.0);
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (cloud.label[i] == Label::blood) cloud.reflectivity[i] *= amp;
}

void write_cloud(const std::string& path, const ScattererCloud& cloud) {
  std::size_t n = cloud.size();
  require(cloud.reflectivity.size() == n && cloud.label.size() == n,
          "cloud field lengths disagree");
  Payload p;
  p.dtype = Dtype::u8;
  p.bytes.resize(n * 17);  // 12 position + 4 reflectivity + 1 label
  std::byte* out = p.bytes.data();
  for (std::size_t i = 0; i < n; ++i) {
    float xyz[3] = {static_cast<float>(cloud.positions[i].x),
                    static_cast<float>(cloud.positions[i].y),
                    static_cast<float>(cloud.positions[i].z)};
    std::memcpy(out + i * 12, xyz, 12);
  }
  for (std::size_t i = 0; i < n; ++i) {
    float r = static_cast<float>(cloud.reflectivity[i]);
    std::memcpy(out + n * 12 + i * 4, &r, 4);
  }
  for (std::size_t i = 0; i < n; ++i)
    p.bytes[n * 16 + i] = static_cast<std::byte>(cloud.label[i]);

  ContainerHeader h;
  h.emplace_back("kind", "cloud");
  h.emplace_back("scatterers", std::to_string(n));
  h.emplace_back("layout", "pos_f32x3,refl_f32,label_u8");
  write_container(path, h, p);
}

ScattererCloud read_cloud(const std::string& path) {
  auto [header, payload] = read_container(path);
  require(find_header(header, "kind") && header_value(header, "kind") == "cloud", path,
          ": not a cloud container");
  std::size_t n = std::stoull(header_value(header, "scatterers"));
  require(payload.dtype == Dtype::u8 && payload.bytes.size() == n * 17, path,
          ": cloud payload size mismatch");

  ScattererCloud cloud;
  cloud.positions.resize(n);
  cloud.reflectivity.resize(n);
  cloud.label.resize(n);
  const std::byte* in = payload.bytes.data();
  for (std::size_t i = 0; i < n; ++i) {
    float xyz[3];
    std::memcpy(xyz, in + i * 12, 12);
    cloud.positions[i] = {xyz[0], xyz[1], xyz[2]};
  }
  for (std::size_t i = 0; i < n; ++i) {
    float r;
    std::memcpy(&r, in + n * 12 + i * 4, 4);
    cloud.reflectivity[i] = r;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto raw = static_cast<std::uint8_t>(payload.bytes[n * 16 + i]);
    require(raw <= 1, path, ": bad label value");
    cloud.label[i] = static_cast<Label>(raw);
  }
  return cloud;
}

}  // namespace fqf::tissue
