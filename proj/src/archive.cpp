#include "izsfd/archive.hpp"

#include "izsfd/binio.hpp"
#include "izsfd/error.hpp"

#include <fstream>
#include <string_view>

namespace izsfd {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::string_view kMagic = "IZSFDARC";
constexpr const char* kCheckpointKind = "izsfd-checkpoint";

}  // namespace

void write_archive(const fs::path& path, const Archive& archive) {
    json header;
    header["meta"] = archive.meta;
    header["tensors"] = json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, m] : archive.tensors) {
        header["tensors"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
        offset += static_cast<std::uint64_t>(m.size());
    }
    const std::string text = header.dump();

    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
    binio::put_u64(out, kArchiveVersion);
    binio::put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, m] : archive.tensors)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) binio::put_f64(out, m(i, j));
    if (!out) throw IoError("write failed: " + path.string());
}

Archive read_archive(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    char magic[8];
    if (!in.read(magic, 8) || std::string_view(magic, 8) != kMagic)
        throw IoError(path.string() + " is not an izsfd archive");
    const auto version = binio::get_u64(in);
    if (version != kArchiveVersion) throw IoError("unsupported archive version " + std::to_string(version));
    const auto length = binio::get_u64(in);
    if (length > (std::uint64_t{1} << 32)) throw IoError("archive header is implausibly large");
    std::string text(length, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(length))) throw IoError("truncated archive header");

    Archive archive;
    try {
        const json header = json::parse(text);
        archive.meta = header.at("meta");
        std::uint64_t expected = 0;
        for (const auto& t : header.at("tensors")) {
            const auto rows = t.at("rows").get<Eigen::Index>();
            const auto cols = t.at("cols").get<Eigen::Index>();
            if (t.at("offset").get<std::uint64_t>() != expected) throw IoError("archive tensor table is out of order");
            Matrix m(rows, cols);
            for (Eigen::Index i = 0; i < rows; ++i)
                for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = binio::get_f64(in);
            expected += static_cast<std::uint64_t>(m.size());
            archive.tensors.emplace(t.at("name").get<std::string>(), std::move(m));
        }
    } catch (const json::exception& e) {
        throw IoError("malformed archive header in " + path.string() + ": " + e.what());
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in " + path.string());
    return archive;
}

// ---- checkpoints -----------------------------------------------------------------

namespace {

void put_mlp(Archive& a, const std::string& prefix, const Mlp& net) {
    a.meta["widths"][prefix] = net.widths();
    const auto& params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) a.tensors[prefix + "." + std::to_string(i)] = params[i];
}

const Matrix& tensor(const Archive& a, const std::string& name) {
    const auto it = a.tensors.find(name);
    if (it == a.tensors.end()) throw IoError("checkpoint is missing tensor '" + name + "'");
    return it->second;
}

Mlp get_mlp(const Archive& a, const std::string& prefix) {
    const auto widths = a.meta.at("widths").at(prefix).get<std::vector<Eigen::Index>>();
    std::vector<Matrix> params;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        params.push_back(tensor(a, prefix + "." + std::to_string(2 * i)));
        params.push_back(tensor(a, prefix + "." + std::to_string(2 * i + 1)));
    }
    return Mlp::from_parameters(widths, std::move(params));
}

}  // namespace

void save_checkpoint(const fs::path& path, const StageState& s, const json& run) {
    Archive a;
    a.meta["kind"] = kCheckpointKind;
    a.meta["run"] = run;
    a.meta["stage"] = s.stage;
    a.meta["cardinalities"] = s.attributes.schema().cardinalities();
    a.meta["categories"] = s.attributes.ids();
    a.meta["seen"] = s.seen;
    a.meta["unseen"] = s.unseen;
    a.meta["groups"] = s.groups;
    a.meta["stage1_seen"] = s.stage1_seen;
    a.meta["stage1_unseen"] = s.stage1_unseen;
    a.meta["replay_volume"] = s.replay_volume;
    a.meta["target_scale"] = s.target_scale;
    a.meta["class_ids"] = s.model.class_ids();
    a.meta["model_cardinalities"] = s.model.schema().cardinalities();
    a.meta["frozen"] = s.model.frozen();
    a.meta["widths"] = json::object();

    a.tensors["A"] = s.attributes.matrix();
    a.tensors["P"] = s.memory.p;
    a.tensors["W"] = s.model.prototypes();
    a.tensors["W_tmp"] = s.w_tmp;
    a.tensors["standardizer.mean"] = s.model.standardizer().mean;
    a.tensors["standardizer.scale"] = s.model.standardizer().scale;
    put_mlp(a, "extractor", s.model.extractor());
    put_mlp(a, "classifier", s.model.classifier());
    if (!s.generator.generator().widths().empty()) {
        a.meta["noise_dim"] = s.generator.noise_dim();
        put_mlp(a, "generator", s.generator.generator());
        put_mlp(a, "critic", s.generator.critic());
    }
    json store = json::array();
    for (const auto& [id, e] : s.store.entries()) {
        store.push_back({{"id", id}, {"count", e.count}});
        a.tensors["prototype." + std::to_string(id)] = e.prototype;
    }
    a.meta["store"] = store;
    write_archive(path, a);
}

StageState load_checkpoint(const fs::path& path, json* run) {
    const Archive a = read_archive(path);
    if (a.meta.value("kind", "") != kCheckpointKind) throw IoError(path.string() + " is not a checkpoint");
    try {
        StageState s;
        const auto& m = a.meta;
        s.stage = m.at("stage").get<std::size_t>();
        const AttributeSchema schema(m.at("cardinalities").get<std::vector<Eigen::Index>>());
        s.attributes = FaultAttributeMatrix(schema, m.at("categories").get<std::vector<CategoryId>>(), tensor(a, "A"),
                                            false);
        s.seen = m.at("seen").get<std::vector<CategoryId>>();
        s.unseen = m.at("unseen").get<std::vector<CategoryId>>();
        s.groups = m.at("groups").get<std::vector<std::size_t>>();
        s.stage1_seen = m.at("stage1_seen").get<std::vector<CategoryId>>();
        s.stage1_unseen = m.at("stage1_unseen").get<std::vector<CategoryId>>();
        s.replay_volume = m.at("replay_volume").get<std::size_t>();
        s.target_scale = m.at("target_scale").get<double>();
        s.memory.p = tensor(a, "P");
        s.w_tmp = tensor(a, "W_tmp");

        Standardizer st;
        st.mean = tensor(a, "standardizer.mean");
        st.scale = tensor(a, "standardizer.scale");
        s.model = DiagnosisModel::restore(AttributeSchema(m.at("model_cardinalities").get<std::vector<Eigen::Index>>()),
                                          m.at("class_ids").get<std::vector<CategoryId>>(),
                                          get_mlp(a, "extractor"), get_mlp(a, "classifier"), tensor(a, "W"),
                                          std::move(st), m.at("frozen").get<bool>());
        if (m.contains("noise_dim"))
            s.generator = GenerativeModel(get_mlp(a, "generator"), get_mlp(a, "critic"),
                                          m.at("noise_dim").get<Eigen::Index>());
        for (const auto& e : m.at("store")) {
            const auto id = e.at("id").get<CategoryId>();
            s.store.insert(id, {tensor(a, "prototype." + std::to_string(id)), e.at("count").get<std::size_t>()});
        }
        if (run) *run = m.value("run", json::object());
        return s;
    } catch (const json::exception& e) {
        throw IoError("malformed checkpoint " + path.string() + ": " + e.what());
    }
}

}  // namespace izsfd
