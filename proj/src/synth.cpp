#include "pinlab/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "json.hpp"

#include "pinlab/axis.hpp"
#include "pinlab/csv.hpp"
#include "pinlab/errors.hpp"

namespace pinlab {

std::string_view to_string(ItemClass c) noexcept {
    switch (c) {
    case ItemClass::experiential: return "experiential";
    case ItemClass::reactive: return "reactive";
    case ItemClass::neutral: return "neutral";
    }
    return "neutral";
}

void SynthConfig::validate() const {
    if (n_models < 5) throw ValidationError("n_models", "must be >= 5");
    if (n_experiential_items < 0 || n_reactive_items < 0 || n_neutral_items < 0)
        throw ValidationError("items", "counts must be non-negative");
    int const total = n_experiential_items + n_reactive_items + n_neutral_items;
    if (total < 2) throw ValidationError("items", "need at least two items");
    if (!(loading_strength > 0 && loading_strength < 1))
        throw ValidationError("loading_strength", "must lie in (0, 1)");
    if (!(noise_sd > 0)) throw ValidationError("noise_sd", "must be > 0");
    if (!(hs_noise_sd > 0)) throw ValidationError("hs_noise_sd", "must be > 0");
    if (!(scale.min_value < scale.max_value)) throw ValidationError("scale", "min must be below max");
    if (n_questionnaires < 1 || n_questionnaires > total)
        throw ValidationError("n_questionnaires", "must lie in [1, item count]");
    if (!(persistent_strength >= 0)) throw ValidationError("persistent_strength", "must be >= 0");
}

SynthConfig load_synth_config(std::filesystem::path const& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        SynthConfig c;
        c.n_models = j.value("n_models", c.n_models);
        c.n_experiential_items = j.value("n_experiential_items", c.n_experiential_items);
        c.n_reactive_items = j.value("n_reactive_items", c.n_reactive_items);
        c.n_neutral_items = j.value("n_neutral_items", c.n_neutral_items);
        c.loading_strength = j.value("loading_strength", c.loading_strength);
        c.noise_sd = j.value("noise_sd", c.noise_sd);
        c.hs_noise_sd = j.value("hs_noise_sd", c.hs_noise_sd);
        c.seed = j.value("seed", c.seed);
        c.n_questionnaires = j.value("n_questionnaires", c.n_questionnaires);
        c.persistent_strength = j.value("persistent_strength", c.persistent_strength);
        if (j.contains("scale")) {
            c.scale.min_value = j["scale"].value("min", c.scale.min_value);
            c.scale.max_value = j["scale"].value("max", c.scale.max_value);
        }
        c.validate();
        return c;
    } catch (nlohmann::json::exception const& e) {
        throw ParseError(std::string("synth config: ") + e.what(), 0);
    }
}

namespace {

constexpr std::array<char const*, 20> kExperientialWords{
    "feel",    "emotions", "heart",  "joy",     "tears",  "overwhelming", "deeply", "sensations", "longing", "moved",
    "warmth",  "fear",     "lonely", "excited", "hurt",   "love",         "anxious", "happy",     "sadness", "grief"};
constexpr std::array<char const*, 20> kReactiveWords{
    "rules",   "plan",       "schedule",   "tasks",   "organized", "careful",  "details",  "order",     "routine",  "checklist",
    "deadlines", "systematic", "procedures", "precise", "tidy",      "rational", "logical", "efficient", "structured", "instructions"};
constexpr std::array<char const*, 20> kNeutralWords{
    "weather", "city",     "books",  "travel", "music",  "food",       "morning", "news",  "garden",  "train",
    "coffee",  "shopping", "history", "weekends", "sports", "television", "cooking", "neighbors", "walking", "maps"};
constexpr std::array<char const*, 6> kFiller{"i", "often", "think", "about", "and", "my"};

std::array<char const*, 20> const& vocabulary(ItemClass c) {
    switch (c) {
    case ItemClass::experiential: return kExperientialWords;
    case ItemClass::reactive: return kReactiveWords;
    case ItemClass::neutral: return kNeutralWords;
    }
    return kNeutralWords;
}

std::string two_digit(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d", i);
    return buf;
}

// Fixed instant so that regenerated logs are byte-identical.
constexpr Timestamp kSynthTime{std::chrono::milliseconds{1767225600000LL}};

int round_clip(double x, ResponseScale const& s) {
    return std::clamp(int(std::lround(x)), s.min_value, s.max_value);
}

}  // namespace

Population generate_population(SynthConfig const& config) {
    config.validate();
    Population pop;
    auto& truth = pop.truth;

    std::mt19937_64 trait_rng(derive_seed(config.seed, 0));
    std::mt19937_64 persistent_rng(derive_seed(config.seed, 1));
    std::mt19937_64 neutral_rng(derive_seed(config.seed, 2));
    std::mt19937_64 hs_rng(derive_seed(config.seed, 3));
    std::mt19937_64 text_rng(derive_seed(config.seed, 4));
    std::normal_distribution<double> std_normal;

    for (int m = 0; m < config.n_models; ++m) truth.model_slugs.push_back("synth/m" + two_digit(m + 1));
    truth.traits.resize(config.n_models);
    truth.persistent.resize(config.n_models);
    for (int m = 0; m < config.n_models; ++m) truth.traits(m) = std_normal(trait_rng);
    for (int m = 0; m < config.n_models; ++m) truth.persistent(m) = std_normal(persistent_rng);

    std::vector<std::pair<ItemClass, int>> plan;
    for (int i = 0; i < config.n_experiential_items; ++i) plan.emplace_back(ItemClass::experiential, i);
    for (int i = 0; i < config.n_reactive_items; ++i) plan.emplace_back(ItemClass::reactive, i);
    for (int i = 0; i < config.n_neutral_items; ++i) plan.emplace_back(ItemClass::neutral, i);

    std::vector<Questionnaire> qs(static_cast<std::size_t>(config.n_questionnaires));
    for (int q = 0; q < config.n_questionnaires; ++q) {
        auto& Q = qs[std::size_t(q)];
        Q.questionnaire_id = "SYN" + two_digit(q + 1);
        Q.abbrev = Q.questionnaire_id;
        Q.full_name = "Synthetic questionnaire " + std::to_string(q + 1);
        Q.domain_tag = "synthetic";
        Q.scale = config.scale;
    }

    truth.loadings.resize(Eigen::Index(plan.size()));
    std::uniform_int_distribution<std::size_t> pick_word(0, 19);
    for (std::size_t k = 0; k < plan.size(); ++k) {
        auto const [cls, idx] = plan[k];
        std::string const prefix = cls == ItemClass::experiential ? "exp" : cls == ItemClass::reactive ? "rea" : "neu";
        std::string const id = prefix + two_digit(idx + 1);
        truth.item_ids.push_back(id);
        truth.item_classes.push_back(cls);
        truth.loadings(Eigen::Index(k)) = cls == ItemClass::experiential ? config.loading_strength
                                          : cls == ItemClass::reactive   ? -config.loading_strength
                                                                         : 0.0;
        auto const& words = vocabulary(cls);
        std::string text = "I often think about my ";
        text += words[pick_word(text_rng)];
        text += " and ";
        text += words[pick_word(text_rng)];
        text += " ";
        text += words[pick_word(text_rng)];
        auto& Q = qs[k % std::size_t(config.n_questionnaires)];
        Q.items.push_back({id, Q.questionnaire_id, text, int(Q.items.size()) + 1});
    }
    pop.bank = ItemBank(std::move(qs));

    double const mid = config.scale.midpoint();
    double const quarter_span = config.scale.span() / 4.0;
    std::normal_distribution<double> eps(0.0, config.noise_sd), eps_hs(0.0, config.hs_noise_sd);
    for (int m = 0; m < config.n_models; ++m) {
        ModelSpec const model{"synth", truth.model_slugs[std::size_t(m)]};
        for (std::size_t k = 0; k < plan.size(); ++k) {
            double const a = truth.loadings(Eigen::Index(k));
            double const b = truth.item_classes[k] == ItemClass::neutral ? config.persistent_strength : 0.0;
            double const shared = b * truth.persistent(m) * quarter_span;
            int const vn = round_clip(mid + a * truth.traits(m) * quarter_span + shared + eps(neutral_rng), config.scale);
            int const vh = round_clip(mid + shared + eps_hs(hs_rng), config.scale);
            pop.neutral.records.push_back(
                {model, truth.item_ids[k], "neutral", std::to_string(vn), ResponseStatus::ok, 1, kSynthTime});
            pop.human_simulation.records.push_back(
                {model, truth.item_ids[k], "human_simulation", std::to_string(vh), ResponseStatus::ok, 1, kSynthTime});
        }
    }
    return pop;
}

void write_ground_truth(GroundTruth const& truth, std::filesystem::path const& path) {
    std::vector<csv::Row> rows{{"kind", "id", "class", "value"}};
    for (std::size_t m = 0; m < truth.model_slugs.size(); ++m)
        rows.push_back({"model", truth.model_slugs[m], "", csv::number(truth.traits(Eigen::Index(m)))});
    for (std::size_t m = 0; m < truth.model_slugs.size(); ++m)
        rows.push_back({"model_persistent", truth.model_slugs[m], "", csv::number(truth.persistent(Eigen::Index(m)))});
    for (std::size_t i = 0; i < truth.item_ids.size(); ++i)
        rows.push_back({"item", truth.item_ids[i], std::string(to_string(truth.item_classes[i])),
                        csv::number(truth.loadings(Eigen::Index(i)))});
    csv::write_file(path, rows);
}

void write_toy_embeddings(std::filesystem::path const& vectors, std::filesystem::path const& freq, std::uint64_t seed,
                          int dim) {
    std::mt19937_64 rng(derive_seed(seed, 5));
    std::normal_distribution<double> nd;
    std::ofstream v(vectors), f(freq);
    if (!v || !f) throw IoError("cannot write embedding files");

    auto write_word = [&](std::string const& w, Eigen::VectorXd const& centre, double spread, int count) {
        v << w;
        for (int d = 0; d < dim; ++d) v << ' ' << csv::number(centre(d) + spread * nd(rng));
        v << '\n';
        f << w << ' ' << count << '\n';
    };
    for (auto cls : {ItemClass::experiential, ItemClass::reactive, ItemClass::neutral}) {
        Eigen::VectorXd centre(dim);
        for (int d = 0; d < dim; ++d) centre(d) = nd(rng);
        int count = 40;
        for (auto const* w : vocabulary(cls)) write_word(w, centre, 0.5, count++);
    }
    Eigen::VectorXd const origin = Eigen::VectorXd::Zero(dim);
    for (auto const* w : kFiller) write_word(w, origin, 1.0, 5000);
    if (!v || !f) throw IoError("failed writing embedding files");
}

void write_population(Population const& pop, SynthConfig const& config, std::filesystem::path const& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "bank.txt");
        out << serialize_item_bank(pop.bank);
        if (!out) throw IoError("cannot write bank");
    }
    pop.neutral.save(dir / "neutral.jsonl");
    pop.human_simulation.save(dir / "human_simulation.jsonl");
    write_ground_truth(pop.truth, dir / "ground_truth.csv");
    write_toy_embeddings(dir / "vectors.txt", dir / "freq.txt", config.seed);
}

}  // namespace pinlab
