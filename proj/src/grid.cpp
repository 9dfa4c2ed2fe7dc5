#include "zk/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include <Eigen/Dense>

#include "zk/errors.hpp"

namespace zk {

namespace {

struct Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

// FFTW's planner is not thread safe; execution on distinct arrays is.
// FFTW_ESTIMATE keeps plan selection, and hence results, reproducible.
const Plans& plans_for(int nx, int ny) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, Plans> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find({nx, ny});
  if (it != cache.end()) return it->second;
  RealArray r(std::size_t(nx) * ny);
  ComplexArray c(std::size_t(nx) * (ny / 2 + 1));
  auto* cp = reinterpret_cast<fftw_complex*>(c.data());
  Plans p;
  p.r2c = fftw_plan_dft_r2c_2d(nx, ny, r.data(), cp, FFTW_ESTIMATE);
  p.c2r = fftw_plan_dft_c2r_2d(nx, ny, cp, r.data(), FFTW_ESTIMATE);
  return cache.emplace(std::pair{nx, ny}, p).first->second;
}

// The DFT index origin sits at x = -pi*lx, so Fourier-series coefficients in
// the e^{ikx} basis differ from raw DFT output by (-1)^(jx+jy).
inline double origin_sign(const GridSpec& g, int ix, int iy) {
  return ((g.mode_x(ix) + iy) & 1) ? -1.0 : 1.0;
}

}  // namespace

GridSpec::GridSpec(int nx, int ny, double lx, double ly) : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
  if (nx < 4 || ny < 4 || nx % 2 || ny % 2)
    throw ContractViolation("GridSpec: nx, ny must be even and >= 4");
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
    throw ContractViolation("GridSpec: lx, ly must be positive and finite");
}

GridSpec GridSpec::refined(int factor) const {
  if (factor < 1) throw ContractViolation("refine factor must be >= 1");
  return GridSpec(nx_ * factor, ny_ * factor, lx_, ly_);
}

Complex SpectralField::coeff(int jx, int jy) const {
  const int nx = grid.nx(), ny = grid.ny();
  auto row = [nx](int j) { return ((j % nx) + nx) % nx; };
  if (jy >= 0 && jy <= ny / 2) return at(row(jx), jy);
  if (jy < 0 && -jy < ny / 2) return std::conj(at(row(-jx), -jy));
  throw ContractViolation("SpectralField::coeff: mode out of range");
}

std::vector<Complex> SpectralField::full() const {
  const int nx = grid.nx(), ny = grid.ny();
  std::vector<Complex> out(std::size_t(nx) * ny);
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy) {
      const int jy = iy <= ny / 2 ? iy : iy - ny;
      out[std::size_t(ix) * ny + iy] = coeff(grid.mode_x(ix), jy);
    }
  return out;
}

void forward_into(const GridSpec& g, std::span<const double> in, std::span<Complex> out,
                  std::span<double> scratch) {
  if (in.size() != g.size() || out.size() != g.spectral_size() || scratch.size() != g.size())
    throw ContractViolation("forward: shape mismatch");
  const Plans& p = plans_for(g.nx(), g.ny());
  std::copy(in.begin(), in.end(), scratch.begin());
  fftw_execute_dft_r2c(p.r2c, scratch.data(), reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / double(g.size());
  const int nyh = g.nyh();
  for (int ix = 0; ix < g.nx(); ++ix) {
    Complex* row = out.data() + std::size_t(ix) * nyh;
    for (int iy = 0; iy < nyh; ++iy) row[iy] *= scale * origin_sign(g, ix, iy);
  }
}

void inverse_into(const SpectralField& F, std::span<double> out, std::span<Complex> scratch) {
  const GridSpec& g = F.grid;
  if (out.size() != g.size() || scratch.size() != g.spectral_size())
    throw ContractViolation("inverse: shape mismatch");
  const Plans& p = plans_for(g.nx(), g.ny());
  const int nyh = g.nyh();
  for (int ix = 0; ix < g.nx(); ++ix) {
    const Complex* src = F.half.data() + std::size_t(ix) * nyh;
    Complex* dst = scratch.data() + std::size_t(ix) * nyh;
    for (int iy = 0; iy < nyh; ++iy) dst[iy] = src[iy] * origin_sign(g, ix, iy);
  }
  fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
}

SpectralField forward(const Field& f) {
  if (f.values.size() != f.grid.size()) throw ContractViolation("forward: shape mismatch");
  SpectralField F(f.grid);
  RealArray scratch(f.grid.size());
  forward_into(f.grid, f.values, F.half, scratch);
  return F;
}

Field inverse(const SpectralField& F) {
  if (F.half.size() != F.grid.spectral_size()) throw ContractViolation("inverse: shape mismatch");
  Field f(F.grid);
  ComplexArray scratch(F.grid.spectral_size());
  inverse_into(F, f.values, scratch);
  return f;
}

SpectralField derivative(const SpectralField& F, int mx, int my) {
  if (mx < 0 || my < 0) throw ContractViolation("derivative: negative order");
  const GridSpec& g = F.grid;
  auto multiplier = [](double k, int m) {
    Complex r{1.0, 0.0};
    for (int n = 0; n < m; ++n) r *= Complex{0.0, k};
    return r;
  };
  std::vector<Complex> mxv(g.nx()), myv(g.nyh());
  for (int ix = 0; ix < g.nx(); ++ix)
    mxv[ix] = (mx % 2 == 1 && ix == g.nx() / 2) ? Complex{} : multiplier(g.kx(ix), mx);
  for (int iy = 0; iy < g.nyh(); ++iy)
    myv[iy] = (my % 2 == 1 && iy == g.ny() / 2) ? Complex{} : multiplier(g.ky(iy), my);
  SpectralField out(g);
  for (int ix = 0; ix < g.nx(); ++ix)
    for (int iy = 0; iy < g.nyh(); ++iy) out.at(ix, iy) = F.at(ix, iy) * mxv[ix] * myv[iy];
  return out;
}

double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t block = 128;
  if (v.size() <= block) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double quadrature(const GridSpec& g, std::span<const double> values) {
  if (values.size() != g.size()) throw ContractViolation("quadrature: shape mismatch");
  return pairwise_sum(values) / double(g.size()) * g.area();
}

double quadrature(const Field& f) { return quadrature(f.grid, f.values); }

SpectralField refine(const SpectralField& F, int factor) {
  const GridSpec& g = F.grid;
  const GridSpec fine = g.refined(factor);
  if (factor == 1) return F;
  SpectralField out(fine);
  const int nyq_x = g.nx() / 2, nyq_y = g.ny() / 2;
  auto put_row = [&](int jx, int iy, Complex v) {
    const int IX = ((jx % fine.nx()) + fine.nx()) % fine.nx();
    out.at(IX, iy) += v;
  };
  for (int ix = 0; ix < g.nx(); ++ix) {
    const int jx = g.mode_x(ix);
    for (int iy = 0; iy <= nyq_y; ++iy) {
      Complex v = F.at(ix, iy);
      // A Nyquist mode is split evenly between +n/2 and -n/2 so that the
      // refined field stays real and interpolates the original nodes.
      if (iy == nyq_y) v *= 0.5;
      if (jx == nyq_x) {
        put_row(jx, iy, 0.5 * v);
        put_row(-jx, iy, 0.5 * v);
      } else {
        put_row(jx, iy, v);
      }
    }
  }
  return out;
}

SpectralField restrict_to(const SpectralField& F, const GridSpec& coarse) {
  const GridSpec& g = F.grid;
  if (coarse.nx() > g.nx() || coarse.ny() > g.ny() || coarse.lx() != g.lx() ||
      coarse.ly() != g.ly())
    throw ContractViolation("restrict_to: target grid is not coarser");
  if (coarse == g) return F;
  SpectralField out(coarse);
  const int nyq_x = coarse.nx() / 2, nyq_y = coarse.ny() / 2;
  for (int ix = 0; ix < coarse.nx(); ++ix) {
    const int jx = coarse.mode_x(ix);
    for (int iy = 0; iy <= nyq_y; ++iy) {
      Complex v = F.coeff(jx, iy);
      if (jx == nyq_x) v += F.coeff(-jx, iy);
      if (iy == nyq_y) {
        v += F.coeff(jx, -iy);
        if (jx == nyq_x) v += F.coeff(-jx, -iy);
      }
      out.at(ix, iy) = v;
    }
  }
  return out;
}

namespace {
inline bool in_tail(const GridSpec& g, int ix, int iy) {
  return 3 * std::abs(g.mode_x(ix)) > g.nx() || 3 * iy > g.ny();
}
}  // namespace

double tail_indicator(const SpectralField& F) {
  const GridSpec& g = F.grid;
  double all = 0.0, tail = 0.0;
  for (int ix = 0; ix < g.nx(); ++ix)
    for (int iy = 0; iy < g.nyh(); ++iy) {
      const double a = std::norm(F.at(ix, iy));
      all = std::max(all, a);
      if (in_tail(g, ix, iy)) tail = std::max(tail, a);
    }
  return all > 0.0 ? std::sqrt(tail / all) : 0.0;
}

void two_thirds_filter(SpectralField& F) {
  const GridSpec& g = F.grid;
  for (int ix = 0; ix < g.nx(); ++ix)
    for (int iy = 0; iy < g.nyh(); ++iy)
      if (in_tail(g, ix, iy)) F.at(ix, iy) = Complex{};
}

SpectralField translate(const SpectralField& F, double sx, double sy) {
  const GridSpec& g = F.grid;
  std::vector<Complex> fx(g.nx()), fy(g.nyh());
  for (int ix = 0; ix < g.nx(); ++ix) {
    const double a = g.kx(ix) * sx;
    fx[ix] = ix == g.nx() / 2 ? Complex{std::cos(a), 0.0} : std::polar(1.0, -a);
  }
  for (int iy = 0; iy < g.nyh(); ++iy) {
    const double a = g.ky(iy) * sy;
    fy[iy] = iy == g.ny() / 2 ? Complex{std::cos(a), 0.0} : std::polar(1.0, -a);
  }
  SpectralField out(g);
  for (int ix = 0; ix < g.nx(); ++ix)
    for (int iy = 0; iy < g.nyh(); ++iy) out.at(ix, iy) = F.at(ix, iy) * fx[ix] * fy[iy];
  return out;
}

namespace {

// Basis functions of the symmetric trigonometric interpolant along one axis
// and their first two derivatives; the Nyquist mode uses cos(k x).
struct AxisBasis {
  Complex e, de, dde;
};

AxisBasis axis_basis(double k, double x, bool nyquist) {
  if (nyquist) {
    const double c = std::cos(k * x), s = std::sin(k * x);
    return {Complex{c, 0.0}, Complex{-k * s, 0.0}, Complex{-k * k * c, 0.0}};
  }
  const Complex e = std::polar(1.0, k * x);
  return {e, Complex{0.0, k} * e, -k * k * e};
}

// Columns 0 and ny/2 are self-conjugate; all others stand for a pair.
inline double column_weight(const GridSpec& g, int iy) {
  return (iy == 0 || iy == g.ny() / 2) ? 1.0 : 2.0;
}

}  // namespace

PointJet evaluate_jet(const SpectralField& F, double x, double y) {
  const GridSpec& g = F.grid;
  std::vector<AxisBasis> by(g.nyh());
  for (int iy = 0; iy < g.nyh(); ++iy)
    by[iy] = axis_basis(g.ky(iy), y, iy == g.ny() / 2);
  Complex v{}, vx{}, vy{}, vxx{}, vxy{}, vyy{};
  for (int ix = 0; ix < g.nx(); ++ix) {
    Complex s{}, sy{}, syy{};
    for (int iy = 0; iy < g.nyh(); ++iy) {
      const Complex c = column_weight(g, iy) * F.at(ix, iy);
      s += c * by[iy].e;
      sy += c * by[iy].de;
      syy += c * by[iy].dde;
    }
    const AxisBasis bx = axis_basis(g.kx(ix), x, ix == g.nx() / 2);
    v += bx.e * s;
    vx += bx.de * s;
    vy += bx.e * sy;
    vxx += bx.dde * s;
    vxy += bx.de * sy;
    vyy += bx.e * syy;
  }
  return {v.real(), vx.real(), vy.real(), vxx.real(), vxy.real(), vyy.real()};
}

double evaluate(const SpectralField& F, double x, double y) {
  const double xs[1] = {x}, ys[1] = {y};
  return evaluate_tensor(F, xs, ys)[0];
}

std::vector<double> evaluate_tensor(const SpectralField& F, std::span<const double> xs,
                                    std::span<const double> ys) {
  const GridSpec& g = F.grid;
  using Mat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Index na = Eigen::Index(xs.size()), nb = Eigen::Index(ys.size());
  Mat C(g.nx(), g.nyh());
  for (int ix = 0; ix < g.nx(); ++ix)
    for (int iy = 0; iy < g.nyh(); ++iy) C(ix, iy) = column_weight(g, iy) * F.at(ix, iy);
  Mat Ey(g.nyh(), nb);
  for (int iy = 0; iy < g.nyh(); ++iy)
    for (Eigen::Index b = 0; b < nb; ++b)
      Ey(iy, b) = axis_basis(g.ky(iy), ys[b], iy == g.ny() / 2).e;
  Mat Ex(na, g.nx());
  for (Eigen::Index a = 0; a < na; ++a)
    for (int ix = 0; ix < g.nx(); ++ix)
      Ex(a, ix) = axis_basis(g.kx(ix), xs[a], ix == g.nx() / 2).e;
  const Mat T = C * Ey;
  const Mat V = Ex * T;
  std::vector<double> out(std::size_t(na * nb));
  for (Eigen::Index a = 0; a < na; ++a)
    for (Eigen::Index b = 0; b < nb; ++b) out[std::size_t(a * nb + b)] = V(a, b).real();
  return out;
}

}  // namespace zk
