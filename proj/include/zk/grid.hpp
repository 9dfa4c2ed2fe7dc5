#pragma once

// Periodic 2D grid, Fourier transform pair and spectral operators.
//
// Real samples are stored row-major with x along rows: value(i, j) sits at
// index i * ny + j, with x_i = -pi*lx + i*dx and y_j = -pi*ly + j*dy.
// Spectral coefficients of a real field are stored as the non-redundant half
// (nx rows, ny/2 + 1 columns); the remaining modes follow from conjugate
// symmetry and are reachable through SpectralField::coeff().

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include <fftw3.h>

namespace zk {

using Complex = std::complex<double>;

template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}
  T* allocate(std::size_t n);
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }
  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept {
    return true;
  }
};

template <class T>
T* FftwAllocator<T>::allocate(std::size_t n) {
  void* p = fftw_malloc(n * sizeof(T));
  if (!p) throw std::bad_alloc();
  return static_cast<T*>(p);
}

using RealArray = std::vector<double, FftwAllocator<double>>;
using ComplexArray = std::vector<Complex, FftwAllocator<Complex>>;

/// Geometry of the periodic box L_x[-pi, pi) x L_y[-pi, pi) with nx x ny nodes.
class GridSpec {
public:
  GridSpec(int nx, int ny, double lx, double ly);

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double lx() const noexcept { return lx_; }
  double ly() const noexcept { return ly_; }

  double dx() const noexcept { return 2.0 * std::numbers::pi * lx_ / nx_; }
  double dy() const noexcept { return 2.0 * std::numbers::pi * ly_ / ny_; }
  double x(int i) const noexcept { return -std::numbers::pi * lx_ + i * dx(); }
  double y(int j) const noexcept { return -std::numbers::pi * ly_ + j * dy(); }
  double area() const noexcept {
    return 4.0 * std::numbers::pi * std::numbers::pi * lx_ * ly_;
  }

  /// Columns in the half-spectrum storage.
  int nyh() const noexcept { return ny_ / 2 + 1; }
  std::size_t size() const noexcept { return std::size_t(nx_) * ny_; }
  std::size_t spectral_size() const noexcept { return std::size_t(nx_) * nyh(); }

  /// Signed mode index for storage row ix, in (-nx/2, nx/2].
  int mode_x(int ix) const noexcept { return ix <= nx_ / 2 ? ix : ix - nx_; }
  /// Column iy of the half spectrum is mode iy directly.
  static int mode_y(int iy) noexcept { return iy; }
  double kx(int ix) const noexcept { return mode_x(ix) / lx_; }
  double ky(int iy) const noexcept { return iy / ly_; }

  /// Same grid with mode counts multiplied by `factor`.
  GridSpec refined(int factor) const;

  bool operator==(const GridSpec&) const = default;

private:
  int nx_, ny_;
  double lx_, ly_;
};

/// Real samples of one scalar field.
struct Field {
  GridSpec grid;
  RealArray values;

  explicit Field(const GridSpec& g) : grid(g), values(g.size(), 0.0) {}
  double& operator()(int i, int j) { return values[std::size_t(i) * grid.ny() + j]; }
  double operator()(int i, int j) const { return values[std::size_t(i) * grid.ny() + j]; }
};

/// Fourier-series coefficients of a real field, normalised so that the
/// (0,0) coefficient is the mean.
struct SpectralField {
  GridSpec grid;
  ComplexArray half;  ///< nx rows by ny/2+1 columns

  explicit SpectralField(const GridSpec& g) : grid(g), half(g.spectral_size(), Complex{}) {}

  Complex& at(int ix, int iy) { return half[std::size_t(ix) * grid.nyh() + iy]; }
  const Complex& at(int ix, int iy) const { return half[std::size_t(ix) * grid.nyh() + iy]; }

  /// Coefficient of mode (jx, jy) with jx in (-nx/2, nx/2], jy in (-ny/2, ny/2].
  Complex coeff(int jx, int jy) const;

  /// Full nx x ny coefficient array indexed by storage position (FFT order).
  std::vector<Complex> full() const;
};

/// Build a field from f(x, y) sampled at the nodes.
template <class F>
Field sample(const GridSpec& g, F&& f) {
  Field out(g);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) out(i, j) = f(g.x(i), g.y(j));
  return out;
}

SpectralField forward(const Field& f);
Field inverse(const SpectralField& F);

/// Same as inverse(), writing into an existing buffer; `scratch` must hold
/// spectral_size() entries and is overwritten.
void inverse_into(const SpectralField& F, std::span<double> out, std::span<Complex> scratch);
/// Forward transform of raw samples into an existing spectral buffer.
void forward_into(const GridSpec& g, std::span<const double> in, std::span<Complex> out,
                  std::span<double> scratch);

/// Multiply by (i k_x)^mx (i k_y)^my. Nyquist modes are zeroed for odd orders.
SpectralField derivative(const SpectralField& F, int mx, int my);

/// Integral over the periodic box (mean times area), fixed summation order.
double quadrature(const Field& f);
double quadrature(const GridSpec& g, std::span<const double> values);

/// Deterministic pairwise sum.
double pairwise_sum(std::span<const double> v);

/// Zero-pad onto a grid with factor times as many modes in each direction.
SpectralField refine(const SpectralField& F, int factor);
/// Inverse of refine: keep only the modes resolved by `coarse`.
SpectralField restrict_to(const SpectralField& F, const GridSpec& coarse);

/// Max modulus over |j_x| > nx/3 or |j_y| > ny/3, relative to the overall max.
double tail_indicator(const SpectralField& F);

/// Zero every mode with |j_x| > nx/3 or |j_y| > ny/3 in place (2/3 rule).
void two_thirds_filter(SpectralField& F);

/// Band-limited translation: returns the coefficients of u(x - sx, y - sy).
SpectralField translate(const SpectralField& F, double sx, double sy);

/// Value, gradient and Hessian of the trigonometric interpolant at a point.
struct PointJet {
  double value, dx, dy, dxx, dxy, dyy;
};
PointJet evaluate_jet(const SpectralField& F, double x, double y);
double evaluate(const SpectralField& F, double x, double y);

/// Interpolant evaluated on the tensor set {xs} x {ys}; result is
/// xs.size() x ys.size(), row-major.
std::vector<double> evaluate_tensor(const SpectralField& F, std::span<const double> xs,
                                    std::span<const double> ys);

}  // namespace zk
