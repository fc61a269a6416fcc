#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlsys {

class Grid;
class ScalarField;

namespace detail {

// The FFTW planner is a global resource and is not thread safe.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Real-to-complex transform pair for one periodic grid. Execution is
/// serialized through an internal mutex so that concurrent callers never
/// share the transform buffers.
class SpectralWorkspace {
 public:
  SpectralWorkspace(int dim, int n) : dim_(dim), n_(n) {
    real_size_ = 1;
    for (int a = 0; a < dim; ++a) real_size_ *= static_cast<std::size_t>(n);
    spec_size_ = real_size_ / static_cast<std::size_t>(n) *
                 static_cast<std::size_t>(n / 2 + 1);
    real_ = fftw_alloc_real(real_size_);
    spec_ = fftw_alloc_complex(spec_size_);
    if (real_ == nullptr || spec_ == nullptr)
      throw std::bad_alloc();
    std::array<int, 3> dims{n, n, n};
    std::lock_guard lock(planner_mutex());
    fwd_ = fftw_plan_dft_r2c(dim, dims.data(), real_, spec_, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r(dim, dims.data(), spec_, real_, FFTW_ESTIMATE);
  }

  ~SpectralWorkspace() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(fwd_);
      fftw_destroy_plan(bwd_);
    }
    fftw_free(real_);
    fftw_free(spec_);
  }

  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  std::size_t real_size() const { return real_size_; }
  std::size_t spec_size() const { return spec_size_; }

  void forward(std::span<const double> in, std::vector<std::complex<double>>& out) {
    std::lock_guard lock(mtx_);
    std::copy(in.begin(), in.end(), real_);
    fftw_execute(fwd_);
    out.resize(spec_size_);
    for (std::size_t i = 0; i < spec_size_; ++i)
      out[i] = std::complex<double>(spec_[i][0], spec_[i][1]);
  }

  /// Unnormalized inverse: returns n^N times the trigonometric sum.
  void backward(std::span<const std::complex<double>> in, std::span<double> out) {
    std::lock_guard lock(mtx_);
    for (std::size_t i = 0; i < spec_size_; ++i) {
      spec_[i][0] = in[i].real();
      spec_[i][1] = in[i].imag();
    }
    fftw_execute(bwd_);
    std::copy(real_, real_ + real_size_, out.begin());
  }

 private:
  int dim_;
  int n_;
  std::size_t real_size_ = 0;
  std::size_t spec_size_ = 0;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
  std::mutex mtx_;
};

struct GridData {
  int dim = 0;
  double half_extent = 0.0;
  int points_per_axis = 0;
  double spacing = 0.0;
  std::size_t cell_count = 0;
  std::vector<double> axis;         // cell centers along one axis, x_i = -L + i h
  std::vector<double> k2;           // |k|^2 per r2c mode
  std::vector<double> spec_weight;  // Hermitian multiplicity per r2c mode (1 or 2)
};

}  // namespace detail

/// Periodic uniform discretization of the box [-L, L)^N, N in {1,2,3},
/// with spectral frequency data for the negative Laplacian. Cheap to copy;
/// all state is shared and immutable except the internally synchronized
/// transform workspace.
class Grid {
 public:
  Grid(std::shared_ptr<const detail::GridData> data,
       std::shared_ptr<detail::SpectralWorkspace> fft)
      : data_(std::move(data)), fft_(std::move(fft)) {}

  int dim() const { return data_->dim; }
  double half_extent() const { return data_->half_extent; }
  int points_per_axis() const { return data_->points_per_axis; }
  double spacing() const { return data_->spacing; }
  std::size_t cell_count() const { return data_->cell_count; }
  double cell_volume() const {
    return std::pow(data_->spacing, data_->dim);
  }

  double axis_coordinate(int i) const { return data_->axis[static_cast<std::size_t>(i)]; }

  /// Decodes a flat row-major cell index into its center coordinates.
  void cell_coords(std::size_t flat, double out[3]) const {
    const int n = data_->points_per_axis;
    for (int a = data_->dim - 1; a >= 0; --a) {
      out[a] = data_->axis[flat % static_cast<std::size_t>(n)];
      flat /= static_cast<std::size_t>(n);
    }
  }

  double cell_radius2(std::size_t flat) const {
    double x[3] = {0, 0, 0};
    cell_coords(flat, x);
    double r2 = 0;
    for (int a = 0; a < data_->dim; ++a) r2 += x[a] * x[a];
    return r2;
  }

  double cell_radius(std::size_t flat) const { return std::sqrt(cell_radius2(flat)); }

  std::span<const double> mode_k2() const { return data_->k2; }
  std::span<const double> mode_weight() const { return data_->spec_weight; }
  std::size_t spec_size() const { return fft_->spec_size(); }

  bool compatible(const Grid& other) const {
    return data_->dim == other.data_->dim &&
           data_->points_per_axis == other.data_->points_per_axis &&
           data_->half_extent == other.data_->half_extent;
  }

  detail::SpectralWorkspace& workspace() const { return *fft_; }

 private:
  std::shared_ptr<const detail::GridData> data_;
  std::shared_ptr<detail::SpectralWorkspace> fft_;
};

/// One real component sampled at the cell centers of a Grid, row-major.
class ScalarField {
  Grid grid_;  // declared first: values is sized from it

 public:
  explicit ScalarField(Grid grid)
      : grid_(std::move(grid)), values(grid_.cell_count(), 0.0) {}
  ScalarField(Grid grid, std::vector<double> v)
      : grid_(std::move(grid)), values(std::move(v)) {
    if (values.size() != grid_.cell_count())
      throw std::invalid_argument("ScalarField: value count does not match grid");
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  std::vector<double> values;
};

/// The m-component state; all components share one grid.
struct MultiField {
  std::vector<ScalarField> components;

  MultiField() = default;
  MultiField(const Grid& grid, int m) {
    if (m < 1) throw std::invalid_argument("MultiField: m must be >= 1");
    components.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) components.emplace_back(grid);
  }

  int count() const { return static_cast<int>(components.size()); }
  const Grid& grid() const {
    if (components.empty()) throw std::logic_error("MultiField: empty");
    return components.front().grid();
  }
};

inline Grid build_grid(int N, double L, int n) {
  if (N < 1 || N > 3)
    throw std::invalid_argument("build_grid: dimension must be 1, 2 or 3");
  if (!(L > 0.0))
    throw std::invalid_argument("build_grid: half extent must be positive");
  if (n < 8 || n % 2 != 0)
    throw std::invalid_argument("build_grid: points per axis must be even and >= 8");

  auto data = std::make_shared<detail::GridData>();
  data->dim = N;
  data->half_extent = L;
  data->points_per_axis = n;
  data->spacing = 2.0 * L / static_cast<double>(n);
  data->cell_count = 1;
  for (int a = 0; a < N; ++a) data->cell_count *= static_cast<std::size_t>(n);

  data->axis.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    data->axis[static_cast<std::size_t>(i)] = -L + data->spacing * static_cast<double>(i);

  // r2c layout: full axes first, the last axis holds modes 0..n/2.
  const std::size_t last = static_cast<std::size_t>(n / 2 + 1);
  std::size_t lead = data->cell_count / static_cast<std::size_t>(n);
  data->k2.resize(lead * last);
  data->spec_weight.resize(lead * last);
  const double base = std::numbers::pi / L;
  std::vector<int> mode(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) mode[static_cast<std::size_t>(i)] = (i <= n / 2) ? i : i - n;

  for (std::size_t idx = 0; idx < data->k2.size(); ++idx) {
    std::size_t rem = idx;
    const int m_last = static_cast<int>(rem % last);
    rem /= last;
    double k2 = std::pow(base * m_last, 2);
    for (int a = N - 2; a >= 0; --a) {
      const int mi = mode[rem % static_cast<std::size_t>(n)];
      rem /= static_cast<std::size_t>(n);
      k2 += std::pow(base * mi, 2);
    }
    data->k2[idx] = k2;
    data->spec_weight[idx] = (m_last == 0 || m_last == n / 2) ? 1.0 : 2.0;
  }

  auto fft = std::make_shared<detail::SpectralWorkspace>(N, n);
  return Grid(std::move(data), std::move(fft));
}

/// Rectangle-rule quadrature, h^N * sum. Spectrally accurate for smooth
/// periodic-decaying integrands.
inline double integrate(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return f.grid().cell_volume() * s;
}

inline double inner(const ScalarField& a, const ScalarField& b) {
  if (!a.grid().compatible(b.grid()))
    throw std::invalid_argument("inner: fields live on different grids");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return a.grid().cell_volume() * s;
}

inline double inner(const MultiField& a, const MultiField& b) {
  if (a.count() != b.count())
    throw std::invalid_argument("inner: component count mismatch");
  double s = 0.0;
  for (int j = 0; j < a.count(); ++j) s += inner(a.components[j], b.components[j]);
  return s;
}

/// Total squared L2 norm, sum_j int Phi_j^2.
inline double total_mass(const MultiField& f) { return inner(f, f); }

/// int |grad f|^2 evaluated as sum_k |k|^2 |f_k|^2 with Parseval
/// normalization; exactly nonnegative.
inline double laplacian_quadratic_form(const ScalarField& f) {
  const Grid& g = f.grid();
  std::vector<std::complex<double>> spec;
  g.workspace().forward(f.values, spec);
  auto k2 = g.mode_k2();
  auto w = g.mode_weight();
  double s = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i)
    s += w[i] * k2[i] * std::norm(spec[i]);
  const double ncells = static_cast<double>(g.cell_count());
  return g.cell_volume() / ncells * s;
}

/// -Laplacian f via the spectral multiplier |k|^2.
inline ScalarField negative_laplacian(const ScalarField& f) {
  const Grid& g = f.grid();
  std::vector<std::complex<double>> spec;
  g.workspace().forward(f.values, spec);
  auto k2 = g.mode_k2();
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= k2[i];
  ScalarField out(g);
  g.workspace().backward(spec, out.values);
  const double inv = 1.0 / static_cast<double>(g.cell_count());
  for (double& v : out.values) v *= inv;
  return out;
}

namespace detail {

/// Rotates the sample array so the cell centered at the origin moves to
/// index 0 per axis; kernel samples become samples in the displacement
/// variable expected by circular convolution.
inline std::vector<double> shift_origin_to_front(const ScalarField& f) {
  const Grid& g = f.grid();
  const int n = g.points_per_axis();
  const int N = g.dim();
  std::vector<double> out(f.size());
  const std::size_t un = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t rem = i, src = 0;
    std::size_t digits[3];
    for (int a = N - 1; a >= 0; --a) {
      digits[a] = rem % un;
      rem /= un;
    }
    for (int a = 0; a < N; ++a)
      src = src * un + (digits[a] + un / 2) % un;
    out[i] = f.values[src];
  }
  return out;
}

}  // namespace detail

/// Periodic convolution (kernel * f)(x) = h^N sum_y kernel(x-y) f(y).
/// The kernel is a field sampled at cell centers like any other.
inline ScalarField convolve(const ScalarField& kernel, const ScalarField& f) {
  const Grid& g = f.grid();
  if (!g.compatible(kernel.grid()))
    throw std::invalid_argument("convolve: kernel and field live on different grids");
  std::vector<double> shifted = detail::shift_origin_to_front(kernel);
  std::vector<std::complex<double>> kspec, fspec;
  g.workspace().forward(shifted, kspec);
  g.workspace().forward(f.values, fspec);
  for (std::size_t i = 0; i < kspec.size(); ++i) kspec[i] *= fspec[i];
  ScalarField out(g);
  g.workspace().backward(kspec, out.values);
  const double scale = g.cell_volume() / static_cast<double>(g.cell_count());
  for (double& v : out.values) v *= scale;
  return out;
}

/// Precomputed spectrum of a convolution kernel, for repeated use.
struct KernelSpectrum {
  std::vector<std::complex<double>> spec;
};

inline KernelSpectrum kernel_spectrum(const ScalarField& kernel) {
  std::vector<double> shifted = detail::shift_origin_to_front(kernel);
  KernelSpectrum ks;
  kernel.grid().workspace().forward(shifted, ks.spec);
  return ks;
}

inline ScalarField convolve(const KernelSpectrum& kernel, const ScalarField& f) {
  const Grid& g = f.grid();
  std::vector<std::complex<double>> fspec;
  g.workspace().forward(f.values, fspec);
  if (fspec.size() != kernel.spec.size())
    throw std::invalid_argument("convolve: kernel spectrum size mismatch");
  for (std::size_t i = 0; i < fspec.size(); ++i) fspec[i] *= kernel.spec[i];
  ScalarField out(g);
  g.workspace().backward(fspec, out.values);
  const double scale = g.cell_volume() / static_cast<double>(g.cell_count());
  for (double& v : out.values) v *= scale;
  return out;
}

/// Samples an evaluator of the cell-center coordinates.
inline ScalarField sample(const Grid& g, const std::function<double(const double*)>& fn) {
  ScalarField out(g);
  double x[3];
  for (std::size_t i = 0; i < out.size(); ++i) {
    g.cell_coords(i, x);
    out[i] = fn(x);
  }
  return out;
}

/// Samples a radial evaluator at cell-center distances from the origin.
inline ScalarField sample_radial(const Grid& g, const std::function<double(double)>& fn) {
  ScalarField out(g);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(g.cell_radius(i));
  return out;
}

/// Trigonometric interpolation of f onto a finer grid with the same extent.
/// Modes at the source Nyquist frequency are dropped; intended for smooth
/// decaying fields where that content is negligible.
inline ScalarField prolong(const ScalarField& f, const Grid& fine) {
  const Grid& coarse = f.grid();
  if (fine.dim() != coarse.dim() || fine.half_extent() != coarse.half_extent())
    throw std::invalid_argument("prolong: grids must share dimension and extent");
  const int nc = coarse.points_per_axis();
  const int nf = fine.points_per_axis();
  if (nf < nc) throw std::invalid_argument("prolong: target grid is coarser");
  if (nf == nc) return f;

  const int N = coarse.dim();
  std::vector<std::complex<double>> cs;
  coarse.workspace().forward(f.values, cs);
  std::vector<std::complex<double>> fs(fine.spec_size(), std::complex<double>(0, 0));

  const std::size_t clast = static_cast<std::size_t>(nc / 2 + 1);
  const std::size_t flast = static_cast<std::size_t>(nf / 2 + 1);
  for (std::size_t idx = 0; idx < cs.size(); ++idx) {
    std::size_t rem = idx;
    int m[3] = {0, 0, 0};
    m[N - 1] = static_cast<int>(rem % clast);
    rem /= clast;
    bool keep = m[N - 1] < nc / 2;
    for (int a = N - 2; a >= 0; --a) {
      int i = static_cast<int>(rem % static_cast<std::size_t>(nc));
      rem /= static_cast<std::size_t>(nc);
      m[a] = (i <= nc / 2) ? i : i - nc;
      if (std::abs(m[a]) >= nc / 2) keep = false;
    }
    if (!keep) continue;
    std::size_t dst = 0;
    for (int a = 0; a < N - 1; ++a) {
      const int i = (m[a] >= 0) ? m[a] : m[a] + nf;
      dst = dst * static_cast<std::size_t>(nf) + static_cast<std::size_t>(i);
    }
    dst = dst * flast + static_cast<std::size_t>(m[N - 1]);
    fs[dst] = cs[idx];
  }

  ScalarField out(fine);
  fine.workspace().backward(fs, out.values);
  const double inv = 1.0 / static_cast<double>(coarse.cell_count());
  for (double& v : out.values) v *= inv;
  return out;
}

/// Cyclic translation by whole cells; an exact permutation of the samples.
inline ScalarField translate_cells(const ScalarField& f, const int shift[3]) {
  const Grid& g = f.grid();
  const int n = g.points_per_axis();
  const int N = g.dim();
  const std::size_t un = static_cast<std::size_t>(n);
  ScalarField out(g);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t rem = i, src = 0;
    std::size_t digits[3];
    for (int a = N - 1; a >= 0; --a) {
      digits[a] = rem % un;
      rem /= un;
    }
    for (int a = 0; a < N; ++a) {
      const long moved = (static_cast<long>(digits[a]) - shift[a]) % n;
      const std::size_t s = static_cast<std::size_t>((moved + n) % n);
      src = src * un + s;
    }
    out[i] = f.values[src];
  }
  return out;
}

/// Translation by an arbitrary offset via the spectral shift theorem;
/// exact for the band-limited interpolant.
inline ScalarField spectral_shift(const ScalarField& f, const double delta[3]) {
  const Grid& g = f.grid();
  const int n = g.points_per_axis();
  const int N = g.dim();
  std::vector<std::complex<double>> spec;
  g.workspace().forward(f.values, spec);

  const double base = std::numbers::pi / g.half_extent();
  const std::size_t last = static_cast<std::size_t>(n / 2 + 1);
  for (std::size_t idx = 0; idx < spec.size(); ++idx) {
    std::size_t rem = idx;
    double phase = base * static_cast<double>(rem % last) * delta[N - 1];
    rem /= last;
    for (int a = N - 2; a >= 0; --a) {
      const int i = static_cast<int>(rem % static_cast<std::size_t>(n));
      rem /= static_cast<std::size_t>(n);
      const int m = (i <= n / 2) ? i : i - n;
      phase += base * m * delta[a];
    }
    spec[idx] *= std::complex<double>(std::cos(phase), -std::sin(phase));
  }
  ScalarField out(g);
  g.workspace().backward(spec, out.values);
  const double inv = 1.0 / static_cast<double>(g.cell_count());
  for (double& v : out.values) v *= inv;
  return out;
}

/// Max |f| over the outermost cell layer relative to max |f| overall;
/// used to warn when the periodic box visibly truncates a state.
inline double boundary_max_ratio(const ScalarField& f) {
  const Grid& g = f.grid();
  const int n = g.points_per_axis();
  const int N = g.dim();
  const std::size_t un = static_cast<std::size_t>(n);
  double all = 0.0, edge = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = std::abs(f[i]);
    all = std::max(all, v);
    std::size_t rem = i;
    bool boundary = false;
    for (int a = 0; a < N; ++a) {
      const std::size_t d = rem % un;
      rem /= un;
      if (d == 0 || d == un - 1) boundary = true;
    }
    if (boundary) edge = std::max(edge, v);
  }
  return all > 0.0 ? edge / all : 0.0;
}

}  // namespace nlsys
