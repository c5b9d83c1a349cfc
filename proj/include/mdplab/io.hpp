#ifndef MDPLAB_IO_HPP
#define MDPLAB_IO_HPP

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "mdp.hpp"
#include "mixing.hpp"

namespace mdplab {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Whitespace-tokenized reader; '#' starts a comment to end of line.
class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string next() {
        std::string tok;
        while (in_ >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in_, rest);
                continue;
            }
            return tok;
        }
        throw FormatError("unexpected end of file");
    }

    void expect(const std::string& want) {
        const std::string got = next();
        if (got != want) throw FormatError("expected '" + want + "', found '" + got + "'");
    }

    long long next_int() {
        const std::string tok = next();
        size_t pos = 0;
        long long v;
        try {
            v = std::stoll(tok, &pos);
        } catch (const std::exception&) {
            throw FormatError("expected integer, found '" + tok + "'");
        }
        if (pos != tok.size()) throw FormatError("expected integer, found '" + tok + "'");
        return v;
    }

    double next_double() {
        const std::string tok = next();
        size_t pos = 0;
        double v;
        try {
            v = std::stod(tok, &pos);
        } catch (const std::exception&) {
            throw FormatError("expected number, found '" + tok + "'");
        }
        if (pos != tok.size()) throw FormatError("expected number, found '" + tok + "'");
        return v;
    }

private:
    std::istream& in_;
};

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open file: " + path);
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open file for writing: " + path);
    return out;
}

}  // namespace detail

// --- MDP files -------------------------------------------------------------
//
//   mdplab-mdp v1
//   n_states N
//   n_actions A
//   gamma G
//   reward      # N rows of A values
//   ...
//   kernel      # N*A rows (row-major by (s,a)) of N values
//   ...

inline void write_mdp(std::ostream& out, const TabularMdp& mdp) {
    out << "mdplab-mdp v1\n";
    out << "n_states " << mdp.n_states() << "\n";
    out << "n_actions " << mdp.n_actions() << "\n";
    out << "gamma " << detail::fmt_double(mdp.gamma()) << "\n";
    out << "reward\n";
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a)
            out << detail::fmt_double(mdp.reward(s, a)) << (a + 1 == mdp.n_actions() ? "\n" : " ");
    }
    out << "kernel\n";
    for (int s = 0; s < mdp.n_states(); ++s)
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const auto row = mdp.kernel_row(s, a);
            for (int s2 = 0; s2 < mdp.n_states(); ++s2)
                out << detail::fmt_double(row[s2]) << (s2 + 1 == mdp.n_states() ? "\n" : " ");
        }
}

inline TabularMdp read_mdp(std::istream& in) {
    detail::TokenReader tr(in);
    tr.expect("mdplab-mdp");
    tr.expect("v1");
    tr.expect("n_states");
    const int ns = static_cast<int>(tr.next_int());
    tr.expect("n_actions");
    const int na = static_cast<int>(tr.next_int());
    tr.expect("gamma");
    const double gamma = tr.next_double();
    if (ns <= 0 || na <= 0) throw FormatError("mdp file: dimensions must be positive");
    tr.expect("reward");
    Vec reward(static_cast<size_t>(ns) * na);
    for (auto& r : reward) r = tr.next_double();
    tr.expect("kernel");
    Vec kernel(static_cast<size_t>(ns) * na * ns);
    for (auto& k : kernel) k = tr.next_double();
    try {
        return TabularMdp(ns, na, std::move(reward), std::move(kernel), gamma);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("mdp file: ") + e.what());
    }
}

inline void write_mdp_file(const std::string& path, const TabularMdp& mdp) {
    auto out = detail::open_output(path);
    write_mdp(out, mdp);
}

inline TabularMdp read_mdp_file(const std::string& path) {
    auto in = detail::open_input(path);
    return read_mdp(in);
}

// --- Raw kernel files --------------------------------------------------------
//
//   mdplab-kernel v1
//   n_states N
//   kernel      # N rows of N values

inline void write_kernel(std::ostream& out, const Mat& p) {
    out << "mdplab-kernel v1\n";
    out << "n_states " << p.rows() << "\n";
    out << "kernel\n";
    for (int i = 0; i < p.rows(); ++i)
        for (int j = 0; j < p.cols(); ++j)
            out << detail::fmt_double(p(i, j)) << (j + 1 == p.cols() ? "\n" : " ");
}

inline Mat read_kernel(std::istream& in) {
    detail::TokenReader tr(in);
    tr.expect("mdplab-kernel");
    tr.expect("v1");
    tr.expect("n_states");
    const int n = static_cast<int>(tr.next_int());
    if (n <= 0) throw FormatError("kernel file: n_states must be positive");
    tr.expect("kernel");
    Mat p(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) p(i, j) = tr.next_double();
    if (!is_stochastic(p, 1e-10)) throw FormatError("kernel file: rows must be distributions");
    return p;
}

inline Mat read_kernel_file(const std::string& path) {
    auto in = detail::open_input(path);
    return read_kernel(in);
}

inline void write_kernel_file(const std::string& path, const Mat& p) {
    auto out = detail::open_output(path);
    write_kernel(out, p);
}

// --- Policy files ------------------------------------------------------------
//
//   mdplab-policy v1
//   actions
//   a(0) a(1) ... a(N-1)

inline void write_policy(std::ostream& out, const Policy& pi) {
    out << "mdplab-policy v1\nactions\n";
    for (int s = 0; s < pi.n_states(); ++s) out << pi(s) << (s + 1 == pi.n_states() ? "\n" : " ");
}

inline Policy read_policy(std::istream& in, int n_states) {
    detail::TokenReader tr(in);
    tr.expect("mdplab-policy");
    tr.expect("v1");
    tr.expect("actions");
    Policy pi;
    pi.action_of.resize(n_states);
    for (int s = 0; s < n_states; ++s) pi.action_of[s] = static_cast<int>(tr.next_int());
    return pi;
}

inline Policy read_policy_file(const std::string& path, int n_states) {
    auto in = detail::open_input(path);
    return read_policy(in, n_states);
}

inline void write_policy_file(const std::string& path, const Policy& pi) {
    auto out = detail::open_output(path);
    write_policy(out, pi);
}

// --- Doeblin decomposition files ----------------------------------------------
//
//   mdplab-doeblin v1
//   m M
//   p P
//   psi         # N values
//   residual    # N rows of N values

inline void write_decomposition(std::ostream& out, const DoeblinDecomposition& d) {
    out << "mdplab-doeblin v1\n";
    out << "m " << d.m << "\n";
    out << "p " << detail::fmt_double(d.p) << "\n";
    out << "psi\n";
    for (size_t j = 0; j < d.psi.size(); ++j)
        out << detail::fmt_double(d.psi[j]) << (j + 1 == d.psi.size() ? "\n" : " ");
    out << "residual\n";
    for (int i = 0; i < d.residual.rows(); ++i)
        for (int j = 0; j < d.residual.cols(); ++j)
            out << detail::fmt_double(d.residual(i, j)) << (j + 1 == d.residual.cols() ? "\n" : " ");
}

inline DoeblinDecomposition read_decomposition(std::istream& in, int n_states) {
    detail::TokenReader tr(in);
    tr.expect("mdplab-doeblin");
    tr.expect("v1");
    DoeblinDecomposition d;
    tr.expect("m");
    d.m = static_cast<int>(tr.next_int());
    tr.expect("p");
    d.p = tr.next_double();
    if (d.m < 1 || !(d.p > 0.0 && d.p <= 1.0)) throw FormatError("doeblin file: invalid (m,p)");
    tr.expect("psi");
    d.psi.resize(n_states);
    for (auto& x : d.psi) x = tr.next_double();
    tr.expect("residual");
    d.residual = Mat(n_states, n_states);
    for (int i = 0; i < n_states; ++i)
        for (int j = 0; j < n_states; ++j) d.residual(i, j) = tr.next_double();
    return d;
}

inline DoeblinDecomposition read_decomposition_file(const std::string& path, int n_states) {
    auto in = detail::open_input(path);
    return read_decomposition(in, n_states);
}

inline void write_decomposition_file(const std::string& path, const DoeblinDecomposition& d) {
    auto out = detail::open_output(path);
    write_decomposition(out, d);
}

}  // namespace mdplab

#endif
