// Timing comparison of the serial reference loops against the OpenMP path.
// Results must be bit-identical (per-index seeding); only the wall time may
// differ. Run with SUBCHAIN_THREADS=k to pin the worker count.

#include <chrono>
#include <cstdio>
#include <string>

#include "subchain/certify.hpp"
#include "subchain/maps.hpp"
#include "subchain/parallel.hpp"
#include "subchain/rng.hpp"
#include "subchain/subdiff.hpp"

using namespace subchain;

namespace {

template <typename F>
double time_run(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

struct Row {
  const char* name;
  double serial = 0.0;
  double parallel = 0.0;
  bool identical = false;
};

void print_row(const Row& r) {
  std::printf("%-28s %10.3fs %10.3fs %8.2fx   %s\n", r.name, r.serial,
              r.parallel, r.serial / std::max(r.parallel, 1e-9),
              r.identical ? "bit-identical" : "MISMATCH");
}

bool same_stats(const CertificateReport& a, const CertificateReport& b) {
  if (a.stats.size() != b.stats.size()) return false;
  for (std::size_t k = 0; k < a.stats.size(); ++k)
    if (a.stats[k].first != b.stats[k].first ||
        a.stats[k].second != b.stats[k].second)
      return false;
  return true;
}

}  // namespace

int main() {
  std::printf("%-28s %11s %11s %9s\n", "workload", "serial", "parallel",
              "speedup");
  std::printf("workers: %d\n", max_workers());

  {
    Row row{"gradient sampling (20k)"};
    Rng rng(1);
    DenseMatrix x(3, 3), y(3, 3);
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : y.data) v = rng.uniform(-1.0, 1.0);
    CompositeSpec spec;
    spec.shape = FactorPoint{x, y};
    spec.losses.assign(9, make_loss(LossId::logistic, 1.0));
    const std::vector<double> w = flatten_point(spec.shape);
    GradientSample gs_serial, gs_parallel;
    row.serial = time_run([&] {
      gs_serial = sample_gradients(spec, w, 0.5, 20000, 3, Exec::serial);
    });
    row.parallel = time_run([&] {
      gs_parallel = sample_gradients(spec, w, 0.5, 20000, 3, Exec::parallel);
    });
    row.identical = gs_serial.gradients == gs_parallel.gradients;
    print_row(row);
  }

  {
    Row row{"chain-rule gap (200k pts)"};
    CertificateReport a, b;
    row.serial =
        time_run([&] { a = certify_chainrule_gap(5, 200000, Exec::serial); });
    row.parallel =
        time_run([&] { b = certify_chainrule_gap(5, 200000, Exec::parallel); });
    row.identical = same_stats(a, b);
    print_row(row);
  }

  {
    Row row{"orthant certificate (200k)"};
    CertificateReport a, b;
    row.serial = time_run(
        [&] { a = certify_mf_orthant(200000, 7, 500000, Exec::serial); });
    row.parallel = time_run(
        [&] { b = certify_mf_orthant(200000, 7, 500000, Exec::parallel); });
    row.identical = same_stats(a, b);
    print_row(row);
  }

  {
    Row row{"descent stress (2x120)"};
    CertificateReport a, b;
    row.serial = time_run(
        [&] { a = certify_mf_unreachable(3, 2, 120, 11, Exec::serial); });
    row.parallel = time_run(
        [&] { b = certify_mf_unreachable(3, 2, 120, 11, Exec::parallel); });
    row.identical = same_stats(a, b);
    print_row(row);
  }

  return 0;
}
