#pragma once

// Instrumented arithmetic for operation counting.
//
// opcount::Real wraps a double and tallies every arithmetic primitive into the
// thread's active Ledger. The estimator core is written as templates over the
// scalar type, so instantiating it with opcount::Real counts the exact
// operations executed, while the double instantiation carries no overhead.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace tdipdft::opcount {

enum class Op : std::size_t {
    Add,
    Sub,
    Mul,
    Compare,
    Div,
    Sqrt,
    Sin,
    Cos,
    Exp,   // e^{j x}, one unit per complex exponential
    Angle, // atan2
    Round,
    kCount
};

inline constexpr std::size_t kOpKinds = static_cast<std::size_t>(Op::kCount);

std::string_view op_name(Op op);

struct Tally {
    std::array<std::uint64_t, kOpKinds> ops{};
    std::map<std::string, std::uint64_t> calls;

    std::uint64_t operator[](Op op) const { return ops[static_cast<std::size_t>(op)]; }
    Tally& operator+=(const Tally& other);
};

// Raw counts per named phase. Phases nest; counts are attributed to the
// innermost active phase only.
class Ledger {
public:
    void record(Op op) { ++current().ops[static_cast<std::size_t>(op)]; }
    void record_call(std::string_view fn) { ++current().calls[std::string(fn)]; }

    const std::map<std::string, Tally>& phases() const { return phases_; }
    Tally total() const;
    void clear();

    const std::string& phase() const { return phase_; }
    void set_phase(std::string name) { phase_ = std::move(name); }

private:
    Tally& current() { return phases_[phase_]; }

    std::map<std::string, Tally> phases_;
    std::string phase_ = "unscoped";
};

// Ledger receiving counts on this thread; nullptr disables recording.
Ledger* active_ledger();
void set_active_ledger(Ledger* ledger);

inline void record(Op op)
{
    if (auto* l = active_ledger()) l->record(op);
}

inline void record_call(std::string_view fn)
{
    if (auto* l = active_ledger()) l->record_call(fn);
}

// Installs a ledger for the lifetime of the scope.
class LedgerScope {
public:
    explicit LedgerScope(Ledger& ledger) : previous_(active_ledger()) { set_active_ledger(&ledger); }
    ~LedgerScope() { set_active_ledger(previous_); }
    LedgerScope(const LedgerScope&) = delete;
    LedgerScope& operator=(const LedgerScope&) = delete;

private:
    Ledger* previous_;
};

class PhaseScope {
public:
    explicit PhaseScope(std::string name);
    ~PhaseScope();
    PhaseScope(const PhaseScope&) = delete;
    PhaseScope& operator=(const PhaseScope&) = delete;

private:
    std::string previous_;
};

class Real {
public:
    constexpr Real() = default;
    constexpr Real(double v) : v_(v) {} // NOLINT: constants enter the algebra implicitly

    constexpr double value() const { return v_; }
    explicit operator double() const { return v_; }

    friend Real operator+(Real a, Real b) { record(Op::Add); return a.v_ + b.v_; }
    friend Real operator-(Real a, Real b) { record(Op::Sub); return a.v_ - b.v_; }
    friend Real operator*(Real a, Real b) { record(Op::Mul); return a.v_ * b.v_; }
    friend Real operator/(Real a, Real b) { record(Op::Div); return a.v_ / b.v_; }
    // sign flips are wiring, not arithmetic
    Real operator-() const { return -v_; }

    Real& operator+=(Real o) { return *this = *this + o; }
    Real& operator-=(Real o) { return *this = *this - o; }
    Real& operator*=(Real o) { return *this = *this * o; }
    Real& operator/=(Real o) { return *this = *this / o; }

    friend bool operator<(Real a, Real b) { record(Op::Compare); return a.v_ < b.v_; }
    friend bool operator>(Real a, Real b) { record(Op::Compare); return a.v_ > b.v_; }
    friend bool operator<=(Real a, Real b) { record(Op::Compare); return a.v_ <= b.v_; }
    friend bool operator>=(Real a, Real b) { record(Op::Compare); return a.v_ >= b.v_; }
    friend bool operator==(Real a, Real b) { record(Op::Compare); return a.v_ == b.v_; }
    friend bool operator!=(Real a, Real b) { record(Op::Compare); return a.v_ != b.v_; }

private:
    double v_ = 0.0;
};

class Complex {
public:
    constexpr Complex() = default;
    constexpr Complex(Real re, Real im = Real{}) : re_(re), im_(im) {}
    constexpr Complex(double re, double im = 0.0) : re_(re), im_(im) {}

    constexpr Real real() const { return re_; }
    constexpr Real imag() const { return im_; }

    friend Complex operator+(Complex a, Complex b) { return {a.re_ + b.re_, a.im_ + b.im_}; }
    friend Complex operator-(Complex a, Complex b) { return {a.re_ - b.re_, a.im_ - b.im_}; }
    friend Complex operator*(Complex a, Complex b)
    {
        return {a.re_ * b.re_ - a.im_ * b.im_, a.re_ * b.im_ + a.im_ * b.re_};
    }
    friend Complex operator*(Complex a, Real s) { return {a.re_ * s, a.im_ * s}; }
    friend Complex operator*(Real s, Complex a) { return {a.re_ * s, a.im_ * s}; }
    friend Complex operator/(Complex a, Real s) { return {a.re_ / s, a.im_ / s}; }
    friend Complex operator/(Complex a, Complex b)
    {
        const Real den = b.re_ * b.re_ + b.im_ * b.im_;
        return {(a.re_ * b.re_ + a.im_ * b.im_) / den, (a.im_ * b.re_ - a.re_ * b.im_) / den};
    }
    Complex operator-() const { return {-re_, -im_}; }

    Complex& operator+=(Complex o) { return *this = *this + o; }
    Complex& operator-=(Complex o) { return *this = *this - o; }
    Complex& operator*=(Complex o) { return *this = *this * o; }

private:
    Real re_;
    Real im_;
};

// Human-readable dump of a ledger, one phase per line.
std::string format_ledger(const Ledger& ledger);

} // namespace tdipdft::opcount
