#include "qevo/generators.hpp"

#include "qevo/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace qevo {

// ---------------------------------------------------------------- analysis

std::string verdict_for(double candidate_score, double parent_score) {
    if (candidate_score > parent_score) return "supported";
    if (candidate_score < parent_score) return "refuted";
    return "inconclusive";
}

namespace {

std::string fmt_score(double v) { return std::isfinite(v) ? fmt::format("{:.4f}", v) : std::string("failed"); }

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("n/a"); }

}  // namespace

AnalysisResult template_analysis(const CandidateRecord& candidate, const CandidateRecord* parent) {
    AnalysisResult out;
    auto& a = out.analysis;
    a.mode = "template";
    const double score = candidate.score();
    const double parent_score = parent ? parent->score() : -std::numeric_limits<double>::infinity();
    a.verdict = parent ? verdict_for(score, parent_score) : "inconclusive";
    const auto& m = candidate.metrics;
    if (!candidate.failure.empty()) {
        a.summary = "backtest failed: " + candidate.failure;
    } else {
        a.summary = fmt::format("score {} (parent {}); SR {}, SOR {}, IR {}, MDD {:.4f}, CR {:.4f}, trades {}",
                                fmt_score(score), fmt_score(parent_score), fmt_opt(m.sharpe), fmt_opt(m.sortino),
                                fmt_opt(m.information_ratio), m.max_drawdown, m.cumulative_return,
                                m.num_transactions);
        if (!m.valid) a.summary += "; metrics invalid: " + m.invalid_reason;
    }
    if (std::isfinite(score) && std::isfinite(parent_score)) a.scores["score_delta"] = score - parent_score;
    a.insight = fmt::format("{} -> {} (score {} vs parent {})", candidate.hypothesis.hypothesis, a.verdict,
                            fmt_score(score), fmt_score(parent_score));
    out.insight_text = a.insight;
    return out;
}

std::vector<Insight> curate_insights(std::vector<Insight> repository, std::size_t n_max,
                                     std::optional<std::string> consolidation, int island_id, int generation,
                                     std::size_t keep_recent) {
    std::set<std::string> seen;
    std::vector<Insight> unique;
    unique.reserve(repository.size());
    for (auto& i : repository)
        if (seen.insert(i.content_hash).second) unique.push_back(std::move(i));
    if (consolidation && unique.size() > keep_recent) {
        std::vector<Insight> merged;
        merged.push_back(make_insight(island_id, generation, *consolidation, std::nullopt));
        merged.insert(merged.end(), std::make_move_iterator(unique.end() - static_cast<std::ptrdiff_t>(keep_recent)),
                      std::make_move_iterator(unique.end()));
        unique = std::move(merged);
    }
    if (unique.size() > n_max) unique.erase(unique.begin(), unique.end() - static_cast<std::ptrdiff_t>(n_max));
    return unique;
}

// ---------------------------------------------------------------- tree edits

namespace {

using Path = std::vector<std::size_t>;

bool is_boolean_node(const Expr& e) {
    return is_comparison(e.op) || e.op == ExprOp::and_ || e.op == ExprOp::or_ || e.op == ExprOp::not_;
}

void find_paths(const ExprPtr& e, const std::function<bool(const Expr&)>& pred, Path& cur, std::vector<Path>& out) {
    if (!e) return;
    if (pred(*e)) out.push_back(cur);
    for (std::size_t i = 0; i < e->args.size(); ++i) {
        cur.push_back(i);
        find_paths(e->args[i], pred, cur, out);
        cur.pop_back();
    }
}

std::vector<Path> paths_where(const ExprPtr& e, const std::function<bool(const Expr&)>& pred) {
    std::vector<Path> out;
    Path cur;
    find_paths(e, pred, cur, out);
    return out;
}

ExprPtr node_at(ExprPtr e, const Path& path) {
    for (auto i : path) e = e->args[i];
    return e;
}

ExprPtr replace_at(const ExprPtr& e, const Path& path, std::size_t depth, ExprPtr replacement) {
    if (depth == path.size()) return replacement;
    auto copy = std::make_shared<Expr>(*e);
    copy->args[path[depth]] = replace_at(e->args[path[depth]], path, depth + 1, std::move(replacement));
    return copy;
}

bool references(const ExprPtr& e, const std::string& name) {
    if (!e) return false;
    if (e->op == ExprOp::indicator && e->name == name) return true;
    return std::any_of(e->args.begin(), e->args.end(), [&](const ExprPtr& a) { return references(a, name); });
}

// Removes every reference to `name`; and/or nodes keep their other side.
ExprPtr prune(const ExprPtr& e, const std::string& name) {
    if (!e || !references(e, name)) return e;
    if (e->op == ExprOp::and_ || e->op == ExprOp::or_) {
        auto l = prune(e->args[0], name);
        auto r = prune(e->args[1], name);
        if (!l) return r;
        if (!r) return l;
        return make_binary(e->op, l, r);
    }
    return nullptr;
}

ExprPtr rename_refs(const ExprPtr& e, const std::string& from, const std::string& to) {
    if (!e || !references(e, from)) return e;
    if (e->op == ExprOp::indicator) return make_indicator_ref(to, e->field);
    auto copy = std::make_shared<Expr>(*e);
    for (auto& a : copy->args) a = rename_refs(a, from, to);
    return copy;
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

std::string unique_name(const Program& p, const std::string& base) {
    if (!p.find_indicator(base)) return base;
    for (int i = 2;; ++i) {
        std::string candidate = base + "_" + std::to_string(i);
        if (!p.find_indicator(candidate)) return candidate;
    }
}

// A sensible standalone condition for a freshly added indicator.
ExprPtr starter_rule(IndicatorKind kind, const std::string& name, Rng& rng) {
    auto ref = make_indicator_ref(name);
    auto close = make_price("close");
    switch (kind) {
        case IndicatorKind::sma:
        case IndicatorKind::ema: return make_binary(rng.bernoulli(0.5) ? ExprOp::gt : ExprOp::lt, close, ref);
        case IndicatorKind::rsi:
            return rng.bernoulli(0.5) ? make_binary(ExprOp::lt, ref, make_number(30))
                                      : make_binary(ExprOp::gt, ref, make_number(50));
        case IndicatorKind::macd_hist:
        case IndicatorKind::momentum:
        case IndicatorKind::rel_momentum: return make_binary(ExprOp::gt, ref, make_number(0));
        case IndicatorKind::bollinger_z:
            return rng.bernoulli(0.5) ? make_binary(ExprOp::lt, ref, make_number(-1))
                                      : make_binary(ExprOp::gt, ref, make_number(0));
        case IndicatorKind::stochastic_kdj: return make_binary(ExprOp::lt, ref, make_number(20));
        case IndicatorKind::rolling_vol: return make_binary(ExprOp::lt, ref, make_number(0.02));
        case IndicatorKind::highest: return make_binary(ExprOp::ge, close, ref);
        case IndicatorKind::lowest: return make_binary(ExprOp::gt, close, ref);
        case IndicatorKind::volume_ratio: return make_binary(ExprOp::gt, ref, make_number(1));
    }
    return make_binary(ExprOp::gt, ref, make_number(0));
}

std::vector<ExprPtr*> rules_of(Program& p) { return {&p.entry, &p.exit, &p.short_entry, &p.short_exit, &p.score}; }

void normalize_rules(Program& p) {
    if (!p.entry) p.exit = nullptr;
    if (!p.short_entry) p.short_exit = nullptr;
    if (!p.score && p.sizing.kind == SizingKind::signal_proportional) p.sizing = {};
}

std::optional<Program> op_param_jitter(const Program& parent, const ParseOptions& options, Rng& rng,
                                       std::string& what) {
    struct Slot {
        int indicator;  // -1 for a sizing/rebalance lookback
        std::size_t param;
    };
    std::vector<Slot> slots;
    for (std::size_t i = 0; i < parent.indicators.size(); ++i)
        for (std::size_t j = 0; j < parent.indicators[i].spec.params.size(); ++j)
            slots.push_back({static_cast<int>(i), j});
    if (parent.sizing.kind == SizingKind::inverse_volatility) slots.push_back({-1, 0});
    if (parent.rebalance.kind == RebalanceKind::every_n_days) slots.push_back({-1, 1});
    if (slots.empty()) return std::nullopt;

    const Slot s = slots[rng.index(slots.size())];
    const int p0 = s.indicator >= 0 ? parent.indicators[static_cast<std::size_t>(s.indicator)].spec.params[s.param]
                                    : (s.param == 0 ? parent.sizing.lookback : parent.rebalance.every);
    const int span = std::max(1, static_cast<int>(std::floor(0.25 * p0)));
    const int magnitude = static_cast<int>(rng.uniform_int(1, span));
    const int sign = rng.bernoulli(0.5) ? 1 : -1;
    for (int dir : {sign, -sign}) {
        const int value = p0 + dir * magnitude;
        Program child = parent;
        try {
            if (s.indicator >= 0) {
                auto& def = child.indicators[static_cast<std::size_t>(s.indicator)];
                def.spec.params[s.param] = value;
                check_params(def.spec, options.bounds);
                what = fmt::format("set {} parameter {} from {} to {}", def.name, s.param + 1, p0, value);
            } else if (s.param == 0) {
                if (value < 2 || value > options.bounds.max_lookback) continue;
                child.sizing.lookback = value;
                what = fmt::format("set the volatility lookback from {} to {}", p0, value);
            } else {
                if (value < 1) continue;
                child.rebalance.every = value;
                what = fmt::format("set the rebalance interval from {} to {} days", p0, value);
            }
        } catch (const ParamOutOfRange&) {
            continue;
        }
        return child;
    }
    return std::nullopt;
}

std::optional<Program> op_rule_edit(const Program& parent, Rng& rng, std::string& what) {
    Program child = parent;
    struct Site {
        ExprPtr* rule;
        const char* label;
        Path path;
    };
    std::vector<Site> sites;
    const char* labels[] = {"entry", "exit", "short_entry", "short_exit", "score"};
    auto rules = rules_of(child);
    for (std::size_t r = 0; r < rules.size(); ++r)
        for (auto& path : paths_where(*rules[r], [](const Expr& e) { return is_comparison(e.op); }))
            sites.push_back({rules[r], labels[r], path});
    if (sites.empty()) return std::nullopt;

    const Site& site = sites[rng.index(sites.size())];
    ExprPtr node = node_at(*site.rule, site.path);
    int literal = -1;
    if (node->args[1]->op == ExprOp::number) literal = 1;
    else if (node->args[0]->op == ExprOp::number) literal = 0;

    if (literal < 0 || rng.bernoulli(0.5)) {
        ExprOp flipped = node->op;
        switch (node->op) {
            case ExprOp::lt: flipped = ExprOp::gt; break;
            case ExprOp::gt: flipped = ExprOp::lt; break;
            case ExprOp::le: flipped = ExprOp::ge; break;
            case ExprOp::ge: flipped = ExprOp::le; break;
            case ExprOp::eq: flipped = ExprOp::ne; break;
            default: flipped = ExprOp::eq; break;
        }
        *site.rule = replace_at(*site.rule, site.path, 0, make_binary(flipped, node->args[0], node->args[1]));
        what = fmt::format("reversed a comparison in the {} rule", site.label);
    } else {
        const double v = node->args[static_cast<std::size_t>(literal)]->number;
        const double step = std::max(std::abs(v) * (0.05 + 0.2 * rng.uniform()), 0.01);
        double nv = round4(v + (rng.bernoulli(0.5) ? step : -step));
        if (nv == v) nv = round4(v + 0.01);
        auto args = node->args;
        args[static_cast<std::size_t>(literal)] = make_number(nv);
        *site.rule = replace_at(*site.rule, site.path, 0, make_binary(node->op, args[0], args[1]));
        what = fmt::format("moved a {} threshold from {} to {}", site.label, v, nv);
    }
    return child;
}

std::optional<Program> op_add_indicator(const Program& parent, const ParseOptions& options, Rng& rng,
                                        std::string& what) {
    if (parent.indicators.size() >= options.max_indicators) return std::nullopt;
    Program child = parent;
    const IndicatorKind kind = all_indicator_kinds[rng.index(std::size(all_indicator_kinds))];
    IndicatorSpec spec{kind, default_params(kind)};
    const std::string name = unique_name(child, std::string(to_string(kind)));
    child.indicators.push_back({name, spec});
    ExprPtr rule = starter_rule(kind, name, rng);
    if (!child.entry) {
        child.entry = rule;
    } else {
        child.entry = make_binary(rng.bernoulli(0.5) ? ExprOp::and_ : ExprOp::or_, child.entry, rule);
    }
    if (rule_node_count(child) > options.max_rule_nodes) return std::nullopt;
    what = fmt::format("added {} = {} with entry condition {}", name, to_string(kind), to_string(rule));
    return child;
}

std::optional<Program> op_remove_indicator(const Program& parent, Rng& rng, std::string& what) {
    if (parent.indicators.empty()) return std::nullopt;
    Program child = parent;
    const std::size_t idx = rng.index(child.indicators.size());
    const std::string name = child.indicators[idx].name;
    child.indicators.erase(child.indicators.begin() + static_cast<std::ptrdiff_t>(idx));
    for (ExprPtr* rule : rules_of(child)) *rule = prune(*rule, name);
    normalize_rules(child);
    what = fmt::format("removed indicator {} and the conditions using it", name);
    return child;
}

std::optional<Program> op_crossover(const Program& parent, const std::vector<Program>& cousins,
                                    const ParseOptions& options, Rng& rng, std::string& what) {
    std::vector<const Program*> donors;
    for (const auto& c : cousins)
        if (c.entry || c.exit) donors.push_back(&c);
    if (donors.empty()) return std::nullopt;
    const Program& donor = *donors[rng.index(donors.size())];

    std::vector<std::pair<const ExprPtr*, bool>> source_rules;  // (rule, is_exit)
    if (donor.entry) source_rules.push_back({&donor.entry, false});
    if (donor.exit) source_rules.push_back({&donor.exit, true});
    auto [src, is_exit] = source_rules[rng.index(source_rules.size())];
    auto paths = paths_where(*src, is_boolean_node);
    ExprPtr graft = node_at(*src, paths[rng.index(paths.size())]);

    Program child = parent;
    for (const auto& ref : referenced_indicators(graft)) {
        const IndicatorDef* theirs = donor.find_indicator(ref);
        const IndicatorDef* mine = child.find_indicator(ref);
        if (mine && mine->spec == theirs->spec) continue;
        if (mine) {
            const std::string renamed = unique_name(child, ref + "_x");
            graft = rename_refs(graft, ref, renamed);
            child.indicators.push_back({renamed, theirs->spec});
        } else {
            child.indicators.push_back(*theirs);
        }
    }
    if (child.indicators.size() > options.max_indicators) return std::nullopt;

    ExprPtr* target = is_exit && child.entry ? &child.exit : &child.entry;
    const auto mode = rng.index(3);
    if (!*target || mode == 0)
        *target = graft;
    else
        *target = make_binary(mode == 1 ? ExprOp::and_ : ExprOp::or_, *target, graft);
    if (rule_node_count(child) > options.max_rule_nodes) return std::nullopt;
    what = fmt::format("grafted {} from {} into the {} rule", to_string(graft), donor.name,
                       target == &child.exit ? "exit" : "entry");
    return child;
}

std::optional<Program> op_sizing_overlay(const Program& parent, Rng& rng, std::string& what, int forced = -1) {
    Program child = parent;
    const int choice = forced >= 0 ? forced : static_cast<int>(rng.index(4));
    switch (choice) {
        case 0: {
            std::vector<SizingRule> options;
            if (parent.sizing.kind != SizingKind::equal_weight) options.push_back({SizingKind::equal_weight, 0, 0.0, {}});
            if (parent.sizing.kind != SizingKind::inverse_volatility)
                options.push_back({SizingKind::inverse_volatility, static_cast<int>(rng.uniform_int(20, 120)), 0.0, {}});
            if (parent.sizing.kind != SizingKind::fixed_fraction) {
                static constexpr double fractions[] = {0.1, 0.2, 0.25, 0.5};
                options.push_back({SizingKind::fixed_fraction, 0, fractions[rng.index(4)], {}});
            }
            child.sizing = options[rng.index(options.size())];
            what = "switched position sizing";
            break;
        }
        case 1:
            if (child.overlay.trailing_stop) {
                child.overlay.trailing_stop.reset();
                what = "removed the trailing stop";
            } else {
                child.overlay.trailing_stop = static_cast<double>(rng.uniform_int(5, 20)) / 100.0;
                what = fmt::format("added a {} trailing stop", *child.overlay.trailing_stop);
            }
            break;
        case 2:
            if (child.overlay.max_position_weight) {
                child.overlay.max_position_weight.reset();
                what = "removed the position weight cap";
            } else {
                child.overlay.max_position_weight = static_cast<double>(rng.uniform_int(6, 16)) / 20.0;
                what = fmt::format("capped position weights at {}", *child.overlay.max_position_weight);
            }
            break;
        default: {
            static const Rebalance schedules[] = {{RebalanceKind::daily, 1},
                                                  {RebalanceKind::every_n_days, 5},
                                                  {RebalanceKind::every_n_days, 21},
                                                  {RebalanceKind::monthly, 1}};
            std::vector<Rebalance> options;
            for (const auto& r : schedules)
                if (!(r == parent.rebalance)) options.push_back(r);
            child.rebalance = options[rng.index(options.size())];
            what = "changed the rebalance schedule";
            break;
        }
    }
    return child;
}

bool same_strategy(Program a, const Program& b) {
    a.name = b.name;
    return serialize_program(a) == serialize_program(b);
}

Hypothesis mutation_hypothesis(const std::string& description, const CandidateRecord& parent, MutationOp op) {
    Hypothesis h;
    h.hypothesis = "Changing the parent strategy (" + description + ") improves its combined score.";
    h.rationale = fmt::format("The parent scored {}; a {} edit probes whether this part of the design limits it.",
                              fmt_score(parent.score()), to_string(op));
    h.objectives = "Raise Sharpe and information ratio without deepening the drawdown.";
    h.expected_insights = "Sensitivity of the strategy to this edit.";
    h.risks_limitations = "Single random edit; improvements may be noise on the training window.";
    h.experimentation_ideas = "Repeat the edit with different magnitudes or combine it with sizing changes.";
    return h;
}

}  // namespace

std::string_view to_string(MutationOp op) {
    switch (op) {
        case MutationOp::param_jitter: return "param_jitter";
        case MutationOp::rule_edit: return "rule_edit";
        case MutationOp::structural: return "structural";
        case MutationOp::crossover: return "crossover";
        case MutationOp::sizing_overlay: return "sizing_overlay";
    }
    return "?";
}

std::optional<Program> apply_mutation(MutationOp op, const Program& parent, const std::vector<Program>& cousins,
                                      const ParseOptions& options, Rng& rng, std::string& description) {
    switch (op) {
        case MutationOp::param_jitter: return op_param_jitter(parent, options, rng, description);
        case MutationOp::rule_edit: return op_rule_edit(parent, rng, description);
        case MutationOp::structural:
            if (parent.indicators.empty() || rng.bernoulli(0.5)) {
                if (auto r = op_add_indicator(parent, options, rng, description)) return r;
            }
            return op_remove_indicator(parent, rng, description);
        case MutationOp::crossover: return op_crossover(parent, cousins, options, rng, description);
        case MutationOp::sizing_overlay: return op_sizing_overlay(parent, rng, description);
    }
    return std::nullopt;
}

GeneratorOutcome MutationalGenerator::propose(const GenerationContext& context, Rng& rng, const BacktestCheck&) {
    ParseOptions options = context.parse_options;
    options.taxonomy = &context.taxonomy;
    const Program parent = parse_program(context.parent.program, ParseOptions{nullptr, options.bounds,
                                                                              options.max_indicators,
                                                                              options.max_rule_nodes});
    std::vector<Program> cousins;
    for (const auto& c : context.cousins) {
        try {
            cousins.push_back(parse_program(c.program, ParseOptions{nullptr, options.bounds, 64, 1024}));
        } catch (const ProgramError&) {
        }
    }

    static constexpr MutationOp ops[] = {MutationOp::param_jitter, MutationOp::rule_edit, MutationOp::structural,
                                         MutationOp::crossover, MutationOp::sizing_overlay};
    auto finish = [&](Program child, MutationOp op, const std::string& description) -> std::optional<GeneratorOutcome> {
        child.name = fmt::format("g{}_i{}_{}", context.generation, context.island_id, to_string(op));
        child.tags = derive_tags(child, context.category_table, context.taxonomy);
        try {
            validate_program(child, options);
        } catch (const ProgramError&) {
            return std::nullopt;
        }
        if (same_strategy(child, parent)) return std::nullopt;
        GeneratorOutcome out;
        out.hypothesis = mutation_hypothesis(description, context.parent, op);
        out.program = std::move(child);
        out.operator_name = std::string(to_string(op));
        return out;
    };

    for (int attempt = 0; attempt < 32; ++attempt) {
        const MutationOp op = ops[rng.index(std::size(ops))];
        std::string description;
        auto child = apply_mutation(op, parent, cousins, options, rng, description);
        if (!child) continue;
        if (auto out = finish(std::move(*child), op, description)) return *out;
    }
    // Toggling the trailing stop always yields a distinct valid program.
    std::string description;
    auto child = op_sizing_overlay(parent, rng, description, 1);
    if (auto out = finish(std::move(*child), MutationOp::sizing_overlay, description)) return *out;
    throw GenerationFailure("mutational generator could not edit " + parent.name);
}

AnalysisResult MutationalGenerator::analyze(const CandidateRecord& candidate, const CandidateRecord* parent) {
    return template_analysis(candidate, parent);
}

}  // namespace qevo
