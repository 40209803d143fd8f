// Times the OpenMP kernels against the serial reference implementations
// and checks that both produce identical bits.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "ralab/kernels.hpp"
#include "ralab/matrix.hpp"
#include "ralab/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace ralab;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    const auto start = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto end = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(end - start).count() / reps;
}

Matrix random_matrix(std::size_t n, std::size_t d, Rng& rng) {
    Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) m(i, j) = rng.normal();
    }
    return m;
}

void report(const std::string& name, double par_ms, double ser_ms, bool same) {
    std::printf("%-22s parallel %9.3f ms   serial %9.3f ms   speedup %5.2fx   %s\n", name.c_str(),
                par_ms, ser_ms, ser_ms / par_ms, same ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled\n");
#endif

    Rng rng(42);
    const auto a = random_matrix(1500, 96, rng);
    const auto b = random_matrix(96, 1500, rng);
    const auto dict = random_matrix(128, 768, rng);
    const int reps = 3;

    {
        Matrix out_p, out_s;
        const double tp = time_ms([&] { out_p = gram(a); }, reps);
        const double ts = time_ms([&] { out_s = serial::gram(a); }, reps);
        report("gram 1500x96", tp, ts, out_p.data() == out_s.data());
    }
    {
        Matrix out_p, out_s;
        const double tp = time_ms([&] { out_p = matmul(a, b); }, reps);
        const double ts = time_ms([&] { out_s = serial::matmul(a, b); }, reps);
        report("matmul 1500x96x1500", tp, ts, out_p.data() == out_s.data());
    }
    {
        Matrix out_p, out_s;
        const double tp = time_ms([&] { out_p = matmul_at_b(a, a); }, reps);
        const double ts = time_ms([&] { out_s = serial::matmul_at_b(a, a); }, reps);
        report("at_b 96x1500x96", tp, ts, out_p.data() == out_s.data());
    }
    {
        std::pair<double, double> out_p, out_s;
        const double tp = time_ms([&] { out_p = column_coherence(dict); }, reps);
        const double ts = time_ms([&] { out_s = serial::column_coherence(dict); }, reps);
        report("coherence 128x768", tp, ts, out_p == out_s);
    }
    {
        Matrix out_p, out_s;
        const double tp = time_ms([&] { out_p = unit_normalize_rows(a); }, reps);
        const double ts = time_ms([&] { out_s = serial::unit_normalize_rows(a); }, reps);
        report("normalize 1500x96", tp, ts, out_p.data() == out_s.data());
    }
    return 0;
}
