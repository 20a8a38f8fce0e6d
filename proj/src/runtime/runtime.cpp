#include "btmc/runtime.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <thread>

#include "btmc/state_space.hpp"

namespace btmc {

std::string_view to_string(RunOutcome o)
{
    switch (o) {
    case RunOutcome::Success: return "success";
    case RunOutcome::Failure: return "failure";
    case RunOutcome::Stopped: return "stopped";
    case RunOutcome::ProviderError: return "provider_error";
    }
    return "?";
}

// ---- completion queue and clocks ---------------------------------------------

void CompletionSink::complete(std::uint64_t handle, Status status)
{
    std::lock_guard lock(mu_);
    done_.emplace_back(handle, status);
}

std::vector<std::pair<std::uint64_t, Status>> CompletionSink::drain()
{
    std::lock_guard lock(mu_);
    std::vector<std::pair<std::uint64_t, Status>> out;
    out.swap(done_);
    return out;
}

SteadyClock::SteadyClock()
    : origin_ns_(std::chrono::duration_cast<std::chrono::nanoseconds>(
                     std::chrono::steady_clock::now().time_since_epoch())
                     .count())
{
}

double SteadyClock::now_ms()
{
    auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
                  .count();
    return static_cast<double>(ns - origin_ns_) / 1e6;
}

void SteadyClock::sleep_until_ms(double t)
{
    auto target = std::chrono::steady_clock::time_point(
        std::chrono::nanoseconds(origin_ns_ + static_cast<std::int64_t>(t * 1e6)));
    std::this_thread::sleep_until(target);
}

// ---- scripted provider -------------------------------------------------------

ScriptedProvider::ScriptedProvider(const Model& model, OutcomeScript script, std::optional<std::uint64_t> seed)
    : m_(model), cursor_(model, std::move(script), seed)
{
}

void ScriptedProvider::on_tick(int tick, CompletionSink& sink)
{
    std::vector<Pending> keep;
    for (const Pending& p : pending_) {
        if (p.due <= tick) sink.complete(p.handle, p.status);
        else keep.push_back(p);
    }
    pending_.swap(keep);
}

void ScriptedProvider::start_action(std::uint64_t handle, const LeafCall& call, CompletionSink&)
{
    ActionOutcome o = cursor_.start_action(call.node);
    pending_.push_back({handle, call.tick + std::max(o.latency, 1), o.status});
}

void ScriptedProvider::halt_action(std::uint64_t handle)
{
    ++halts_;
    std::erase_if(pending_, [&](const Pending& p) { return p.handle == handle; });
}

Status ScriptedProvider::check_condition(const LeafCall& call)
{
    return cursor_.check_condition(call.node);
}

std::int64_t ScriptedProvider::set_sv(const LeafCall& call, const SvInfo&, std::int64_t current)
{
    return cursor_.set_sv(call.node, current);
}

std::optional<std::int64_t> ScriptedProvider::read_env_sv(const SvInfo& sv, std::int64_t current, int tick)
{
    return cursor_.read_env(m_.sv_index(sv.name), current, tick);
}

// ---- events ------------------------------------------------------------------

void transition_events(const Model& m, const Transition& t, const std::int32_t* before, const std::int32_t* after,
                       int tick, std::vector<TraceEvent>& out)
{
    using K = TraceEvent::Kind;
    if (t.event != EventKind::None) {
        TraceEvent e;
        e.tick = tick;
        switch (t.event) {
        case EventKind::Ticked: e.kind = K::Ticked; break;
        case EventKind::Returned: e.kind = K::Returned; break;
        case EventKind::Halting: e.kind = K::Halting; break;
        case EventKind::Halted: e.kind = K::Halted; break;
        case EventKind::RootTerminal: e.kind = K::RootTerminal; break;
        case EventKind::None: break;
        }
        int node = t.event == EventKind::RootTerminal ? 0
                   : t.node >= 0                      ? t.node
                                                      : m.processes[static_cast<std::size_t>(t.process)].node;
        e.node = m.nodes[static_cast<std::size_t>(node)].name;
        if (e.kind == K::Returned || e.kind == K::RootTerminal) e.status = t.status;
        out.push_back(std::move(e));
    }
    for (const SvInfo& sv : m.svs) {
        if (before[sv.slot] == after[sv.slot]) continue;
        TraceEvent e;
        e.tick = tick;
        e.kind = K::SvChanged;
        e.sv = sv.name;
        e.old_value = sv.value_name(before[sv.slot]);
        e.new_value = sv.value_name(after[sv.slot]);
        out.push_back(std::move(e));
    }
}

// ---- engine ------------------------------------------------------------------

namespace {

double round_us(double ms)
{
    return std::round(ms * 1000.0) / 1000.0;
}

std::string resolve_args(const syntax::Datum& d, const Model& m, const std::int32_t* vals)
{
    syntax::Datum copy = d;
    auto walk = [&](auto& self, syntax::Datum& x) -> void {
        if (x.kind == syntax::Datum::Kind::Symbol && x.text.size() > 1 && x.text[0] == '$') {
            int sv = m.sv_index(x.text.substr(1));
            if (sv >= 0) {
                const SvInfo& info = m.svs[static_cast<std::size_t>(sv)];
                x.text = info.value_name(vals[info.slot]);
            }
        }
        for (syntax::Datum& c : x.items) self(self, c);
    };
    walk(walk, copy);
    return syntax::print_datum(copy);
}

class Engine {
public:
    Engine(const Model& m, ActionProvider& p, const RunConfig& cfg, Clock& clock)
        : m_(m), step_(m), provider_(p), cfg_(cfg), clock_(clock), vals_(m.initial_values())
    {
    }

    RunResult run()
    {
        res_.trace.model = m_.name;
        try {
            loop();
        } catch (const ProviderError& e) {
            res_.outcome = RunOutcome::ProviderError;
            res_.error = e.what();
        }
        return std::move(res_);
    }

private:
    const Model& m_;
    Stepper step_;
    ActionProvider& provider_;
    const RunConfig& cfg_;
    Clock& clock_;
    CompletionSink sink_;
    Values vals_;
    RunResult res_;
    int tick_ = 0;
    double start_ = 0.0;
    double now_ = 0.0;

    std::uint64_t next_handle_ = 1;
    std::map<int, std::uint64_t> handle_of_;          // node -> running action handle
    std::map<std::uint64_t, int> node_of_;            // handle -> node
    std::map<int, Status> completed_;                 // node -> drained completion

    void emit(TraceEvent e)
    {
        e.ts_ms = round_us(now_ - start_);
        res_.trace.events.push_back(std::move(e));
    }

    void loop()
    {
        start_ = clock_.now_ms();
        for (;;) {
            if (cfg_.max_ticks && tick_ >= *cfg_.max_ticks) {
                res_.outcome = RunOutcome::Stopped;
                return;
            }
            ++tick_;
            res_.ticks = tick_;
            clock_.sleep_until_ms(start_ + tick_ * cfg_.tick_ms);
            now_ = clock_.now_ms();
            provider_.on_tick(tick_, sink_);
            for (auto [h, st] : sink_.drain()) {
                auto it = node_of_.find(h);
                if (it != node_of_.end()) completed_[it->second] = st;  // halted actions are gone: discard
            }
            TraceEvent t;
            t.tick = tick_;
            t.kind = TraceEvent::Kind::Tick;
            emit(t);
            boundary();
            if (auto st = urgent_phase()) {
                res_.outcome = *st == Status::Success ? RunOutcome::Success : RunOutcome::Failure;
                return;
            }
            now_ = clock_.now_ms();
            if (now_ > start_ + (tick_ + 1) * cfg_.tick_ms) {
                TraceEvent o;
                o.tick = tick_;
                o.kind = TraceEvent::Kind::TickOverrun;
                emit(o);
            }
        }
    }

    LeafCall call(int node) const
    {
        const NodeInfo& n = m_.nodes[static_cast<std::size_t>(node)];
        LeafCall c;
        c.node = node;
        c.name = n.name;
        c.id = n.id;
        if (n.args) c.args = resolve_args(*n.args, m_, vals_.data());
        c.tick = tick_;
        return c;
    }

    const Transition& tr(int i) const { return m_.transitions[static_cast<std::size_t>(i)]; }

    int pick(const std::vector<int>& enabled, std::int64_t expected, const std::string& what)
    {
        for (int t : enabled)
            if (tr(t).expected == expected) return t;
        throw ProviderError(what);
    }

    Status action_outcome(int node)
    {
        auto h = handle_of_.find(node);
        if (h == handle_of_.end()) {
            std::uint64_t handle = next_handle_++;
            handle_of_[node] = handle;
            node_of_[handle] = node;
            provider_.start_action(handle, call(node), sink_);
            return Status::Running;
        }
        auto c = completed_.find(node);
        if (c == completed_.end()) return Status::Running;
        Status st = c->second;
        completed_.erase(c);
        node_of_.erase(h->second);
        handle_of_.erase(h);
        return st;
    }

    // Resolves the choice among a process's enabled transitions, calling the
    // provider where the offline model has a free choice.
    int choose(const Process& p, const std::vector<int>& enabled)
    {
        External ext = External::None;
        for (int t : enabled)
            if (tr(t).external != External::None) ext = tr(t).external;
        switch (ext) {
        case External::None: return enabled.front();
        case External::ActionTick: {
            Status st = action_outcome(p.node);
            return pick(enabled, static_cast<std::int64_t>(st), "no transition for action outcome");
        }
        case External::CheckCondition: {
            Status st = provider_.check_condition(call(p.node));
            if (st != Status::Success && st != Status::Failure)
                throw ProviderError("condition " + p.name + " returned " + std::string(to_string(st)));
            return pick(enabled, static_cast<std::int64_t>(st), "no transition for condition outcome");
        }
        case External::SetSv: {
            const NodeInfo& n = m_.nodes[static_cast<std::size_t>(p.node)];
            const SvInfo& sv = m_.svs[static_cast<std::size_t>(n.sv)];
            std::int64_t cur = vals_[sv.slot];
            std::int64_t v = provider_.set_sv(call(p.node), sv, cur);
            return pick(enabled, v,
                        "set_sv moved " + sv.name + " from " + sv.value_name(cur) + " to illegal value " + std::to_string(v));
        }
        case External::HaltAction: {
            auto h = handle_of_.find(p.node);
            if (h != handle_of_.end()) {
                provider_.halt_action(h->second);
                node_of_.erase(h->second);
                handle_of_.erase(h);
            }
            completed_.erase(p.node);
            return enabled.front();
        }
        case External::EnvRead: {
            const SvInfo& sv = m_.svs[static_cast<std::size_t>(p.sv)];
            std::int64_t cur = vals_[sv.slot];
            auto v = provider_.read_env_sv(sv, cur, tick_);
            std::int64_t want = v && *v != cur ? *v : -1;
            return pick(enabled, want, "environment moved " + sv.name + " illegally to " + std::to_string(want));
        }
        }
        return enabled.front();
    }

    void fire(int t)
    {
        Values before = vals_;
        step_.apply(tr(t), vals_.data());
        std::vector<TraceEvent> evs;
        transition_events(m_, tr(t), before.data(), vals_.data(), tick_, evs);
        for (TraceEvent& e : evs) emit(std::move(e));
    }

    void boundary()
    {
        if (m_.terminal(vals_.data())) return;
        // Choices are made against the pre-boundary valuation, then applied in process order.
        std::vector<int> chosen;
        for (const Process& p : m_.processes) {
            std::vector<int> en;
            for (int t : p.by_location[static_cast<std::size_t>(vals_[p.loc_slot])])
                if (tr(t).timing == Timing::OneTick && m_.holds(tr(t).guard, vals_.data())) en.push_back(t);
            if (!en.empty()) chosen.push_back(choose(p, en));
        }
        for (int t : chosen) fire(t);
    }

    std::optional<Status> urgent_phase()
    {
        for (std::size_t steps = 0;; ++steps) {
            if (auto st = m_.terminal(vals_.data())) return st;
            if (steps > 10'000'000) throw ModelError("urgent phase does not terminate");
            bool fired = false;
            for (const Process& p : m_.processes) {
                std::vector<int> en;
                for (int t : p.by_location[static_cast<std::size_t>(vals_[p.loc_slot])])
                    if (tr(t).timing == Timing::Urgent && m_.holds(tr(t).guard, vals_.data())) en.push_back(t);
                if (en.empty()) continue;
                fire(choose(p, en));
                fired = true;
                break;
            }
            if (!fired) return std::nullopt;
        }
    }
};

}  // namespace

RunResult run(const Model& model, ActionProvider& provider, const RunConfig& config, Clock& clock)
{
    if (!(config.tick_ms > 0)) throw std::invalid_argument("tick period must be positive");
    return Engine(model, provider, config, clock).run();
}

}  // namespace btmc
