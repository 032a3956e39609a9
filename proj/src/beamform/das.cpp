#include "fqf/beamform/das.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "fqf/core/container.hpp"
#include "fqf/core/error.hpp"
#include "fqf/core/parallel.hpp"

namespace fqf::beamform {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string join3(double a, double b, double c) {
  std::ostringstream os;
  os.precision(17);
  os << a << ' ' << b << ' ' << c;
  return os.str();
}

void split3(const std::string& s, double out[3]) {
  std::istringstream is(s);
  is >> out[0] >> out[1] >> out[2];
  require(!is.fail(), "bad 3-vector header value '", s, "'");
}

int header_int(const ContainerHeader& h, std::string_view key) {
  return std::stoi(header_value(h, key));
}

std::vector<std::pair<std::size_t, std::size_t>> split_ranges(std::size_t n, std::size_t k) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  ranges.reserve(k);
  std::size_t base = n / k, rem = n % k, at = 0;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t len = base + (i < rem ? 1 : 0);
    ranges.emplace_back(at, at + len);
    at += len;
  }
  return ranges;
}

void validate_grid(const GridSpec& grid) {
  require(grid.dims[0] >= 1 && grid.dims[1] >= 1 && grid.dims[2] >= 1,
          "reconstruction grid dims must be positive");
  require(grid.spacing.x > 0 && grid.spacing.y > 0 && grid.spacing.z > 0,
          "reconstruction grid spacing must be positive");
  require(std::isfinite(grid.origin.x) && std::isfinite(grid.origin.y) &&
              std::isfinite(grid.origin.z),
          "reconstruction grid origin must be finite");
}

// Worst-case resident bytes of one delay matrix over `len` voxels: two taps
// per element per voxel plus the row offsets.
std::size_t matrix_bytes_bound(std::size_t len, int n_elements, int interp_order) {
  std::size_t taps = interp_order == 0 ? 1 : 2;
  std::size_t entry = sizeof(std::complex<double>) + sizeof(std::int32_t);
  return len * taps * static_cast<std::size_t>(n_elements) * entry + (len + 1) * sizeof(std::size_t);
}

std::string chunk_file(const std::string& dir, int chunk_1based) {
  return dir + "/IQ_CHUNK_" + std::to_string(chunk_1based) + ".fqf";
}

std::string frame_file(const std::string& dir, int frame_1based) {
  return dir + "/Frame_" + std::to_string(frame_1based) + ".fqf";
}

std::string make_temp_dir() {
  auto base = std::filesystem::temp_directory_path();
  std::random_device rd;
  for (int attempt = 0; attempt < 16; ++attempt) {
    std::ostringstream os;
    os << "fqf_das_" << std::hex << rd() << rd();
    std::filesystem::path dir = base / os.str();
    std::error_code ec;
    if (std::filesystem::create_directory(dir, ec)) return dir.string();
  }
  fail("could not create a scratch directory under ", base.string());
}

}  // namespace

std::size_t ChunkPlan::max_chunk_points() const {
  std::size_t m = 0;
  for (const auto& [b, e] : ranges) m = std::max(m, e - b);
  return m;
}

ChunkPlan plan_chunks(std::size_t n_points, int n_angles, std::size_t budget_bytes) {
  require(n_points > 0, "reconstruction grid is empty");
  require(n_angles > 0, "need at least one transmit");
  std::size_t row = 16ull * static_cast<std::size_t>(n_angles);
  require(budget_bytes > row, "memory budget cannot hold one voxel across ", n_angles,
          " transmits");
  require(n_points <= std::numeric_limits<std::size_t>::max() / row,
          "reconstruction grid is too large to size");

  std::size_t bytes = row * n_points;
  std::size_t by_total = (bytes + budget_bytes - 1) / budget_bytes;
  std::size_t cap = budget_bytes / row;  // voxels per chunk that fit the budget
  std::size_t by_cap = (n_points + cap - 1) / cap;
  std::size_t k = std::max(by_total, by_cap);

  ChunkPlan plan;
  plan.n_points = n_points;
  plan.n_angles = n_angles;
  plan.budget_bytes = budget_bytes;
  plan.n_chunks = static_cast<int>(k);
  plan.ranges = split_ranges(n_points, k);
  return plan;
}

std::size_t DelayMatrix::bytes() const {
  return values.size() * sizeof(std::complex<double>) + col_idx.size() * sizeof(std::int32_t) +
         row_ptr.size() * sizeof(std::size_t);
}

DelayMatrix build_delay_matrix(std::span<const Vec3> voxels, const rf::TxEvent& tx,
                               const rf::Transducer& td, const BeamformParams& bp,
                               double sampling_rate, double t0, int n_time_samples) {
  require(bp.c > 0.0, "sound speed must be positive");
  require(bp.center_frequency > 0.0, "rotation frequency must be positive");
  require(bp.interp_order == 0 || bp.interp_order == 1,
          "interpolation order must be 0 (nearest) or 1 (linear)");
  require(sampling_rate > 0.0, "sampling rate must be positive");
  require(n_time_samples >= 1, "recording must hold at least one sample");
  require(std::isfinite(tx.angle) && std::abs(tx.angle) < kPi / 2.0,
          "steering angle must stay within the forward half-space");
  int n_elem = td.n_elements();
  require(n_elem >= 1, "transducer has no elements");
  require(static_cast<std::size_t>(n_time_samples) * n_elem <=
              static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()),
          "recording is too large for the column index width");

  double sina = std::sin(tx.angle), cosa = std::cos(tx.angle);
  double ref = std::numeric_limits<double>::infinity();
  for (const Vec3& el : td.elements) ref = std::min(ref, el.x * sina);

  DelayMatrix m;
  m.rows = voxels.size();
  m.n_elements = n_elem;
  m.recorded_samples = n_time_samples;
  m.angle = tx.angle;
  m.interp_order = bp.interp_order;
  m.row_ptr.reserve(voxels.size() + 1);
  m.row_ptr.push_back(0);

  double last_tap = static_cast<double>(n_time_samples - 1);
  double omega = 2.0 * kPi * bp.center_frequency;

  for (const Vec3& p : voxels) {
    require(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z),
            "voxel position must be finite");
    double ttx = (p.x * sina + p.z * cosa - ref) / bp.c;
    for (int e = 0; e < n_elem; ++e) {
      const Vec3& el = td.elements[e];
      if (bp.f_number > 0.0) {
        double lat = std::hypot(p.x - el.x, p.y - el.y);
        if (lat * 2.0 * bp.f_number > p.z - el.z) continue;
      }
      double r = norm(p - el);
      double tau = ttx + r / bp.c;
      double s = (tau - t0) * sampling_rate;
      bool live = false;
      std::complex<double> rot = std::polar(1.0, omega * tau);
      if (bp.interp_order == 0) {
        double i = std::round(s);
        last_tap = std::max(last_tap, i);
        if (i >= 0.0 && i < n_time_samples) {
          m.col_idx.push_back(static_cast<std::int32_t>(i) * n_elem + e);
          m.values.push_back(rot);
          live = true;
        }
      } else {
        double sfl = std::floor(s);
        double frac = s - sfl;
        last_tap = std::max(last_tap, sfl + (frac > 0.0 ? 1.0 : 0.0));
        if (sfl >= 0.0 && sfl < n_time_samples) {
          m.col_idx.push_back(static_cast<std::int32_t>(sfl) * n_elem + e);
          m.values.push_back((1.0 - frac) * rot);
          live = true;
        }
        double snd = sfl + 1.0;
        if (frac > 0.0 && snd >= 0.0 && snd < n_time_samples) {
          m.col_idx.push_back(static_cast<std::int32_t>(snd) * n_elem + e);
          m.values.push_back(frac * rot);
          live = true;
        }
      }
      if (!live) m.out_of_window++;
    }
    m.row_ptr.push_back(m.col_idx.size());
  }

  // The zero-pad span the vectorized layout would need: the deepest tap of the
  // chunk, clamped so padded columns stay indexable.
  double pad_cap = static_cast<double>(std::numeric_limits<std::int32_t>::max() / n_elem - 1);
  m.padded_samples = static_cast<int>(std::min(last_tap, pad_cap)) + 1;
  return m;
}

void apply_delay_matrix(const DelayMatrix& m, const IqFrame& iq, std::complex<double>* out) {
  require(iq.n_elements == m.n_elements, "frame element count does not match the matrix");
  require(iq.n_samples == m.recorded_samples, "frame length does not match the matrix");
  parallel_for(m.rows, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r) {
      std::complex<double> acc{0.0, 0.0};
      for (std::size_t i = m.row_ptr[r]; i < m.row_ptr[r + 1]; ++i) {
        acc += m.values[i] * iq.samples[static_cast<std::size_t>(m.col_idx[i])];
      }
      out[r] = acc;
    }
  });
}

std::vector<IqVolume> das_reconstruct(const std::vector<std::vector<rf::RfFrame>>& frames,
                                      const GridSpec& grid, const rf::Transducer& td,
                                      const BeamformParams& bp, const DasOptions& opts,
                                      DasStats* stats) {
  require(!frames.empty(), "no frames to reconstruct");
  int n_frames = static_cast<int>(frames.size());
  int n_angles = static_cast<int>(frames[0].size());
  require(n_angles >= 1, "frames carry no transmits");
  rf::validate_transducer(td);
  validate_grid(grid);
  int n_elem = td.n_elements();
  const rf::RfFrame& first = frames[0][0];
  double fs = first.sampling_rate;
  int t_samples = first.n_samples;
  require(fs > 0.0 && t_samples >= 1, "frames are empty");
  for (int f = 0; f < n_frames; ++f) {
    require(static_cast<int>(frames[f].size()) == n_angles,
            "transmit count differs between frames");
    for (int a = 0; a < n_angles; ++a) {
      const rf::RfFrame& fr = frames[f][a];
      require(fr.sampling_rate == fs, "sampling rate differs between frames");
      require(fr.n_samples == t_samples, "sample count differs between frames");
      require(fr.n_elements == n_elem, "element count does not match the transducer");
      require(fr.samples.size() == static_cast<std::size_t>(t_samples) * n_elem,
              "frame buffer does not match its declared shape");
      require(fr.tx.angle == frames[0][a].tx.angle,
              "transmit angle differs between frames at the same slot");
      require(fr.t0 == frames[0][a].t0, "start time differs between frames at the same slot");
    }
  }

  std::size_t n_points = grid.num_points();
  ChunkPlan plan = plan_chunks(n_points, n_angles, opts.memory_budget_bytes);

  // Cap the delay matrices resident at once; shrinking chunks shrinks them.
  std::size_t resident = opts.cache_matrices ? static_cast<std::size_t>(n_angles) : 1;
  if (resident * matrix_bytes_bound(plan.max_chunk_points(), n_elem, bp.interp_order) >
      opts.matrix_budget_bytes) {
    std::size_t per_chunk = opts.matrix_budget_bytes / resident;
    std::size_t taps = bp.interp_order == 0 ? 1 : 2;
    std::size_t per_voxel = taps * static_cast<std::size_t>(n_elem) *
                                (sizeof(std::complex<double>) + sizeof(std::int32_t)) +
                            sizeof(std::size_t);
    std::size_t len_cap = per_chunk > sizeof(std::size_t)
                              ? (per_chunk - sizeof(std::size_t)) / per_voxel
                              : 0;
    require(len_cap >= 1, "delay-matrix budget cannot hold one voxel row");
    std::size_t k = std::max<std::size_t>(plan.n_chunks, (n_points + len_cap - 1) / len_cap);
    plan.n_chunks = static_cast<int>(k);
    plan.ranges = split_ranges(n_points, k);
  }

  DasStats local;
  local.chunks = plan.n_chunks;
  local.accumulator_bytes_peak = 16ull * plan.max_chunk_points() * n_angles;

  bool auto_dir = opts.work_dir.empty();
  std::string dir = auto_dir ? make_temp_dir() : opts.work_dir;
  if (!auto_dir) std::filesystem::create_directories(dir);

  std::vector<Vec3> vox;
  std::vector<std::complex<double>> acc, txbuf, stripe;
  for (int ci = 0; ci < plan.n_chunks; ++ci) {
    auto [begin, end] = plan.ranges[ci];
    std::size_t len = end - begin;
    vox.resize(len);
    for (std::size_t i = 0; i < len; ++i) vox[i] = grid.point(begin + i);

    std::vector<DelayMatrix> cached;
    if (opts.cache_matrices) {
      std::size_t bytes = 0;
      for (int a = 0; a < n_angles; ++a) {
        cached.push_back(build_delay_matrix(vox, frames[0][a].tx, td, bp, fs, frames[0][a].t0,
                                            t_samples));
        local.matrix_builds++;
        local.out_of_window += cached.back().out_of_window;
        bytes += cached.back().bytes();
      }
      local.matrix_bytes_peak = std::max(local.matrix_bytes_peak, bytes);
    }

    stripe.assign(len * static_cast<std::size_t>(n_frames), {0.0, 0.0});
    acc.resize(len);
    txbuf.resize(len);
    for (int f = 0; f < n_frames; ++f) {
      std::fill(acc.begin(), acc.end(), std::complex<double>{0.0, 0.0});
      for (int a = 0; a < n_angles; ++a) {
        IqFrame iq = rf_to_iq(frames[f][a], bp.center_frequency, bp.lowpass_taps);
        DelayMatrix rebuilt;
        const DelayMatrix* matrix;
        if (opts.cache_matrices) {
          matrix = &cached[a];
        } else {
          rebuilt = build_delay_matrix(vox, frames[f][a].tx, td, bp, fs, frames[f][a].t0,
                                       t_samples);
          local.matrix_builds++;
          if (f == 0) local.out_of_window += rebuilt.out_of_window;
          local.matrix_bytes_peak = std::max(local.matrix_bytes_peak, rebuilt.bytes());
          matrix = &rebuilt;
        }
        apply_delay_matrix(*matrix, iq, txbuf.data());
        for (std::size_t i = 0; i < len; ++i) acc[i] += txbuf[i];
      }
      double inv = 1.0 / n_angles;
      for (std::size_t i = 0; i < len; ++i) stripe[f * len + i] = acc[i] * inv;
    }

    ContainerHeader h;
    h.emplace_back("kind", "iq_chunk");
    h.emplace_back("chunk", std::to_string(ci + 1));
    h.emplace_back("begin", std::to_string(begin));
    h.emplace_back("end", std::to_string(end));
    h.emplace_back("frames", std::to_string(n_frames));
    h.emplace_back("n_angles", std::to_string(n_angles));
    write_container(chunk_file(dir, ci + 1), h,
                    make_payload(std::span<const std::complex<double>>(stripe)));
  }

  std::vector<IqVolume> volumes = assemble_frames(dir, plan, grid, n_frames);
  if (opts.write_frames) {
    for (int f = 0; f < n_frames; ++f) write_iq_volume(frame_file(dir, f + 1), volumes[f]);
  }
  if (!opts.keep_chunk_files) {
    for (int ci = 0; ci < plan.n_chunks; ++ci) std::filesystem::remove(chunk_file(dir, ci + 1));
  }
  if (auto_dir && !opts.keep_chunk_files && !opts.write_frames) {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }

  if (stats) *stats = local;
  return volumes;
}

std::vector<IqVolume> assemble_frames(const std::string& work_dir, const ChunkPlan& plan,
                                      const GridSpec& grid, int n_frames) {
  require(n_frames >= 1, "no frames to assemble");
  require(plan.n_points == grid.num_points(), "chunk plan does not match the grid");
  require(plan.n_chunks == static_cast<int>(plan.ranges.size()), "chunk plan is inconsistent");

  std::vector<IqVolume> volumes(static_cast<std::size_t>(n_frames));
  for (int f = 0; f < n_frames; ++f) {
    volumes[f].grid = grid;
    volumes[f].frame_index = f;
    volumes[f].values.assign(plan.n_points, {0.0, 0.0});
  }

  for (int ci = 0; ci < plan.n_chunks; ++ci) {
    auto [begin, end] = plan.ranges[ci];
    std::size_t len = end - begin;
    std::string path = chunk_file(work_dir, ci + 1);
    require(std::filesystem::exists(path), "missing chunk file ", path);
    auto [header, payload] = read_container(path);
    require(header_value(header, "kind") == "iq_chunk", path, ": not a chunk file");
    require(header_int(header, "chunk") == ci + 1, path, ": chunk index mismatch");
    require(std::stoull(header_value(header, "begin")) == begin &&
                std::stoull(header_value(header, "end")) == end,
            path, ": chunk range does not match the plan");
    require(header_int(header, "frames") == n_frames, path, ": frame count mismatch");
    int na = header_int(header, "n_angles");
    std::vector<std::complex<double>> data = as_complex_f64(payload);
    require(data.size() == len * static_cast<std::size_t>(n_frames), path,
            ": payload does not match the chunk shape");
    for (int f = 0; f < n_frames; ++f) {
      volumes[f].n_angles = na;
      for (std::size_t i = 0; i < len; ++i) volumes[f].values[begin + i] = data[f * len + i];
    }
  }
  return volumes;
}

void write_iq_volume(const std::string& path, const IqVolume& vol) {
  require(vol.values.size() == vol.grid.num_points(),
          "volume values do not match the grid dims");
  ContainerHeader h;
  h.emplace_back("kind", "iq_volume");
  h.emplace_back("dims", detail::concat(vol.grid.dims[0], ' ', vol.grid.dims[1], ' ',
                                        vol.grid.dims[2]));
  h.emplace_back("spacing", join3(vol.grid.spacing.x, vol.grid.spacing.y, vol.grid.spacing.z));
  h.emplace_back("origin", join3(vol.grid.origin.x, vol.grid.origin.y, vol.grid.origin.z));
  h.emplace_back("frame", std::to_string(vol.frame_index + 1));
  h.emplace_back("n_angles", std::to_string(vol.n_angles));
  write_container(path, h, make_payload(std::span<const std::complex<double>>(vol.values)));
}

IqVolume read_iq_volume(const std::string& path) {
  auto [header, payload] = read_container(path);
  require(header_value(header, "kind") == "iq_volume", path, ": not a volume container");
  IqVolume vol;
  {
    std::istringstream is(header_value(header, "dims"));
    is >> vol.grid.dims[0] >> vol.grid.dims[1] >> vol.grid.dims[2];
    require(!is.fail(), path, ": bad dims header");
  }
  double sp[3], org[3];
  split3(header_value(header, "spacing"), sp);
  split3(header_value(header, "origin"), org);
  vol.grid.spacing = {sp[0], sp[1], sp[2]};
  vol.grid.origin = {org[0], org[1], org[2]};
  vol.frame_index = header_int(header, "frame") - 1;
  vol.n_angles = header_int(header, "n_angles");
  vol.values = as_complex_f64(payload);
  require(vol.values.size() == vol.grid.num_points(), path,
          ": payload does not match the grid dims");
  return vol;
}

}  // namespace fqf::beamform
