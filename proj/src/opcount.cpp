#include "tdipdft/opcount.hpp"

#include <sstream>

namespace tdipdft::opcount {

namespace {
thread_local Ledger* t_ledger = nullptr;
}

std::string_view op_name(Op op)
{
    switch (op) {
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Compare: return "cmp";
    case Op::Div: return "div";
    case Op::Sqrt: return "sqrt";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Angle: return "angle";
    case Op::Round: return "round";
    case Op::kCount: break;
    }
    return "?";
}

Tally& Tally::operator+=(const Tally& other)
{
    for (std::size_t i = 0; i < kOpKinds; ++i) ops[i] += other.ops[i];
    for (const auto& [fn, n] : other.calls) calls[fn] += n;
    return *this;
}

Tally Ledger::total() const
{
    Tally t;
    for (const auto& [_, tally] : phases_) t += tally;
    return t;
}

void Ledger::clear()
{
    phases_.clear();
    phase_ = "unscoped";
}

Ledger* active_ledger() { return t_ledger; }
void set_active_ledger(Ledger* ledger) { t_ledger = ledger; }

PhaseScope::PhaseScope(std::string name)
{
    if (auto* l = active_ledger()) {
        previous_ = l->phase();
        l->set_phase(std::move(name));
    }
}

PhaseScope::~PhaseScope()
{
    if (auto* l = active_ledger()) l->set_phase(previous_);
}

std::string format_ledger(const Ledger& ledger)
{
    std::ostringstream os;
    auto line = [&os](std::string_view name, const Tally& t) {
        os << name << ':';
        for (std::size_t i = 0; i < kOpKinds; ++i) {
            if (t.ops[i] != 0) os << ' ' << op_name(static_cast<Op>(i)) << '=' << t.ops[i];
        }
        for (const auto& [fn, n] : t.calls) os << " call:" << fn << '=' << n;
        os << '\n';
    };
    for (const auto& [name, t] : ledger.phases()) line(name, t);
    line("total", ledger.total());
    return os.str();
}

} // namespace tdipdft::opcount
