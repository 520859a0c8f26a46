#include "planarflow/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "planarflow/error.hpp"

namespace planarflow::corpus {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_logic(const std::string& logic) {
    std::vector<std::string> parts;
    std::stringstream ss(logic);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

} // namespace

std::vector<se3::MotionKind> PromptEntry::camera_kinds() const {
    std::vector<se3::MotionKind> kinds;
    for (const std::string& name : split_logic(camera_logic)) {
        se3::MotionKind k;
        if (!se3::motion_kind_from_name(name, k))
            raise(ErrorKind::invalid_argument,
                  "camera_logic '" + name + "' is not in the action space");
        kinds.push_back(k);
    }
    if (kinds.empty())
        raise(ErrorKind::invalid_argument, "camera_logic is empty");
    return kinds;
}

std::vector<std::size_t> Corpus::pool_indices(bool dynamic_only) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (!dynamic_only || entries[i].dynamic) idx.push_back(i);
    return idx;
}

std::string_view expected_layout(se3::MotionKind kind) {
    switch (kind) {
        case se3::MotionKind::push_in:
        case se3::MotionKind::orbit_left:
        case se3::MotionKind::orbit_right:
            return "Intra";
        case se3::MotionKind::fixed:
            return "Static";
        default:
            return "Inter";
    }
}

namespace {

std::vector<se3::MotionKind> expand_kinds(const std::vector<se3::MotionKind>& kinds) {
    std::vector<se3::MotionKind> out;
    for (se3::MotionKind k : kinds) {
        if (k == se3::MotionKind::pull_left) {
            out.insert(out.end(), {se3::MotionKind::move_left, se3::MotionKind::pull_out,
                                   se3::MotionKind::pan_left});
        } else if (k == se3::MotionKind::pull_right) {
            out.insert(out.end(), {se3::MotionKind::move_right, se3::MotionKind::pull_out,
                                   se3::MotionKind::pan_right});
        } else {
            out.push_back(k);
        }
    }
    return out;
}

PromptEntry parse_entry(const nlohmann::json& j, std::size_t index) {
    const auto fail = [&](const std::string& msg) {
        raise(ErrorKind::invalid_argument,
              "corpus entry " + std::to_string(index) + ": " + msg);
    };
    if (!j.is_object()) fail("not an object");
    for (const char* field : {"prompt", "camera_logic", "domain", "layout_type"})
        if (!j.contains(field) || !j[field].is_string())
            fail(std::string("missing or non-string field '") + field + "'");

    PromptEntry e;
    e.prompt = j["prompt"].get<std::string>();
    e.camera_logic = j["camera_logic"].get<std::string>();
    e.domain = j["domain"].get<std::string>();
    e.layout_type = j["layout_type"].get<std::string>();
    if (j.contains("dynamic")) {
        if (!j["dynamic"].is_boolean()) fail("field 'dynamic' must be a boolean");
        e.dynamic = j["dynamic"].get<bool>();
    }
    if (e.prompt.empty()) fail("empty prompt");

    std::vector<se3::MotionKind> kinds;
    try {
        kinds = e.camera_kinds();
    } catch (const Error& err) {
        fail(err.what());
    }

    if (e.layout_type != "Intra" && e.layout_type != "Inter" && e.layout_type != "Static")
        fail("layout_type must be Intra, Inter or Static");
    bool layout_ok = false;
    for (se3::MotionKind k : kinds)
        if (e.layout_type == expected_layout(k)) layout_ok = true;
    if (!layout_ok)
        fail("layout_type '" + e.layout_type + "' inconsistent with camera_logic '" +
             e.camera_logic + "'");
    return e;
}

} // namespace

Corpus parse_corpus(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        raise(ErrorKind::io, std::string("corpus: JSON parse error: ") + e.what());
    }
    if (!doc.is_array())
        raise(ErrorKind::io, "corpus: top level must be a JSON array");
    if (doc.empty())
        raise(ErrorKind::insufficient_data, "corpus: empty array");

    Corpus corpus;
    corpus.entries.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i)
        corpus.entries.push_back(parse_entry(doc[i], i));

    // camera_logic is authoritative; keyword detection disagreements are
    // recorded, not rejected.
    for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
        const PromptEntry& e = corpus.entries[i];
        const auto detected = se3::detect_motion_tokens(e.prompt);
        const auto declared = expand_kinds(e.camera_kinds());
        bool match = detected.size() == declared.size();
        if (match)
            for (std::size_t k = 0; k < detected.size(); ++k)
                if (detected[k].kind != declared[k]) match = false;
        if (!match)
            corpus.warnings.push_back(
                "entry " + std::to_string(i) +
                ": keyword detection disagrees with camera_logic '" + e.camera_logic + "'");
    }
    return corpus;
}

Corpus load_corpus(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        raise(ErrorKind::io, "corpus: cannot open " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_corpus(buf.str());
}

std::string corpus_to_json(const Corpus& corpus) {
    nlohmann::json doc = nlohmann::json::array();
    for (const PromptEntry& e : corpus.entries) {
        doc.push_back({{"prompt", e.prompt},
                       {"camera_logic", e.camera_logic},
                       {"domain", e.domain},
                       {"layout_type", e.layout_type},
                       {"dynamic", e.dynamic}});
    }
    return doc.dump(2);
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream f(path);
    if (!f)
        raise(ErrorKind::io, "corpus: cannot open " + path + " for writing");
    f << corpus_to_json(corpus) << "\n";
}

std::vector<PromptEntry> sample_batch(const Corpus& corpus, Pool pool, int n, Rng& rng,
                                      bool with_replacement) {
    if (n < 1)
        raise(ErrorKind::invalid_argument, "sample_batch: n must be positive");
    std::vector<std::size_t> idx = corpus.pool_indices(pool == Pool::dynamic);
    if (idx.empty())
        raise(ErrorKind::insufficient_data, "sample_batch: requested pool is empty");

    std::vector<PromptEntry> batch;
    batch.reserve(static_cast<std::size_t>(n));
    if (with_replacement) {
        for (int i = 0; i < n; ++i)
            batch.push_back(
                corpus.entries[idx[rng.uniform_index(static_cast<std::uint64_t>(idx.size()))]]);
        return batch;
    }
    if (static_cast<std::size_t>(n) > idx.size())
        raise(ErrorKind::insufficient_data, "sample_batch: pool exhausted");
    // Partial Fisher-Yates.
    for (int i = 0; i < n; ++i) {
        const std::size_t j =
            i + rng.uniform_index(static_cast<std::uint64_t>(idx.size() - i));
        std::swap(idx[i], idx[j]);
        batch.push_back(corpus.entries[idx[i]]);
    }
    return batch;
}

namespace {

struct DomainTemplates {
    const char* domain;
    std::vector<const char*> subjects;
};

// Subjects deliberately avoid every motion keyword so keyword detection
// agrees with camera_logic.
const std::vector<DomainTemplates>& domain_templates() {
    static const std::vector<DomainTemplates> t = {
        {"Natural Landscapes",
         {"A rugged mountain valley beneath towering granite cliffs",
          "A turquoise lagoon fringed by white sand and palm trees",
          "Basalt columns forming a hexagonal cliff face by the sea",
          "A geothermal field of bubbling mud pools and steaming vents",
          "Terraced rice paddies wrapped around a misty hillside",
          "A dramatic cloudscape at sunset above a calm mountain lake"}},
        {"Urban & Architecture",
         {"A neon-soaked city street glistening after midnight rain",
          "A cobblestone alley in a medieval town at sunrise",
          "The skyline of a modern metropolis reflected in a quiet bay",
          "An empty futuristic metro station with polished floors",
          "A lonely gas station on a desert highway under fluorescent light",
          "A suspension bridge spanning a fog-filled strait"}},
        {"Micro World",
         {"A butterfly wing revealing its mosaic of tiny scales",
          "Dew drops strung along a spider web glistening in the sun",
          "The crystalline structure of sugar grains on a dark table",
          "The glowing filament of an antique light bulb",
          "A macro view of moss sporophytes like an alien forest",
          "Bubbles rising through a glass of carbonated soda"}},
        {"Fantasy",
         {"A floating library drifting around a small star",
          "A dreamlike ruin suspended inside a crystal sphere",
          "A surreal canyon lit by glowing glyphs",
          "A floating island crowned by an endless spiral tower",
          "A city of ancient stone faces half sunk in violet mist",
          "A bridge of starlight stretched across a silent void"}},
    };
    return t;
}

const std::vector<const char*>& dynamic_subjects() {
    static const std::vector<const char*> s = {
        "A massive waterfall thundering down a cliff with rising mist",
        "A lion roaring as its mane whips in the wind",
        "Raindrops hammering a puddle into overlapping ripples",
        "A tornado tearing across a dusty plain toward a wooden barn",
        "Hundreds of paper lanterns lifting into the night sky",
        "A breakdancer spinning amid a cheering crowd",
        "A volcano erupting with rivers of glowing lava",
        "A whale breaching and crashing back into the ocean",
    };
    return s;
}

std::string camera_phrase(se3::MotionKind kind) {
    std::string name(se3::motion_kind_name(kind));
    std::replace(name.begin(), name.end(), '_', ' ');
    return name;
}

} // namespace

Corpus make_example_corpus(int n, Rng& rng) {
    if (n < 1)
        raise(ErrorKind::invalid_argument, "make_example_corpus: n must be positive");

    const auto& kinds = se3::all_motion_kinds();
    const auto& domains = domain_templates();
    Corpus corpus;
    corpus.entries.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const se3::MotionKind kind = kinds[i % kinds.size()];
        const DomainTemplates& dom = domains[(i / kinds.size()) % domains.size()];
        const bool dynamic = (i % 6) == 0;

        PromptEntry e;
        e.domain = dom.domain;
        e.camera_logic = std::string(se3::motion_kind_name(kind));
        e.layout_type = std::string(expected_layout(kind));
        e.dynamic = dynamic;

        std::string subject;
        if (dynamic) {
            subject = dynamic_subjects()[rng.uniform_index(dynamic_subjects().size())];
        } else {
            subject = dom.subjects[rng.uniform_index(dom.subjects.size())];
        }
        if (kind == se3::MotionKind::fixed) {
            e.prompt = subject + ".";
        } else {
            std::string phrase = camera_phrase(kind);
            e.prompt = "Camera " + phrase + ". " + subject + ".";
        }
        corpus.entries.push_back(std::move(e));
    }
    return corpus;
}

void generate_example_corpus(const std::string& path, int n, Rng& rng) {
    save_corpus(make_example_corpus(n, rng), path);
}

} // namespace planarflow::corpus
