#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "oga/alt.hpp"
#include "oga/binary_io.hpp"
#include "oga/csv.hpp"
#include "oga/error.hpp"

namespace oga::alt {

FieldList fields(AltConfig& c) {
    return {
        {"k", &c.k},
        {"kappa", &c.kappa},
        {"r", &c.r},
        {"lambda", &c.lambda},
        {"epsilon", &c.epsilon},
        {"alpha", &c.alpha},
        {"beta", &c.beta},
        {"theta", &c.theta},
        {"hop_max", &c.hop_max},
        {"sample_size", &c.sample_size},
        {"epochs", &c.epochs},
        {"learning_rate", &c.learning_rate},
        {"dropout", &c.dropout},
        {"hidden", &c.hidden},
        {"normalize_input", &c.normalize_input},
    };
}

namespace {

constexpr char kModelMagic[8] = {'O', 'G', 'A', 'A', 'L', 'T', '1', '\0'};

template <typename Derived>
void write_tensor(std::ostream& out, const Eigen::MatrixBase<Derived>& m) {
    binary::write_u64(out, static_cast<std::uint64_t>(m.rows()));
    binary::write_u64(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) binary::write_f32(out, static_cast<float>(m(i, j)));
}

Matrix read_tensor(std::istream& in, const std::string& what, Eigen::Index rows, Eigen::Index cols,
                   const char* name) {
    const auto r = binary::read_u64(in, what);
    const auto c = binary::read_u64(in, what);
    if ((rows >= 0 && static_cast<Eigen::Index>(r) != rows) || (cols >= 0 && static_cast<Eigen::Index>(c) != cols))
        throw FormatError(what + ": tensor `" + name + "` has shape " + std::to_string(r) + "x" +
                          std::to_string(c) + ", expected " + std::to_string(rows) + "x" +
                          std::to_string(cols));
    if (r * c > (1ull << 32)) throw FormatError(what + ": implausible tensor size");
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = binary::read_f32(in, what);
    return m;
}

} // namespace

void save_model(const AltModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(kModelMagic, 8);

    AltConfig config = model.config;
    std::string echo;
    for (const auto& f : fields(config)) echo += f.key + "=" + format_field(f) + "\n";
    echo += "seed=" + std::to_string(config.seed) + "\n";
    binary::write_string(out, echo);

    binary::write_u64(out, model.class_names.size());
    for (const auto& name : model.class_names) binary::write_string(out, name);

    const auto& p = model.params;
    write_tensor(out, p.w);
    write_tensor(out, p.w1);
    write_tensor(out, p.b1);
    write_tensor(out, p.w2);
    write_tensor(out, Eigen::Matrix<double, 1, 1>::Constant(p.b2));
    write_tensor(out, model.concepts.centers);
    if (!out) throw DataError("write failed for " + path.string());
}

AltModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    const std::string what = path.string();
    char magic[8];
    binary::read_exact(in, magic, 8, what);
    if (std::memcmp(magic, kModelMagic, 8) != 0) throw FormatError(what + ": bad magic, expected OGAALT1");

    AltModel model;
    std::istringstream echo(binary::read_string(in, what));
    auto bindings = fields(model.config);
    std::string line;
    while (std::getline(echo, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError(what + ": malformed config echo");
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        if (key == "seed") {
            parse_field({"seed", &model.config.seed}, value);
            continue;
        }
        bool known = false;
        for (const auto& f : bindings)
            if (f.key == key) {
                parse_field(f, value);
                known = true;
            }
        if (!known) throw FormatError(what + ": unknown config key `" + key + "` in model");
    }

    const auto classes = binary::read_u64(in, what);
    if (classes > (1u << 20)) throw FormatError(what + ": implausible class count");
    for (std::uint64_t c = 0; c < classes; ++c) model.class_names.push_back(binary::read_string(in, what));

    auto& p = model.params;
    p.w = read_tensor(in, what, model.config.k, 1, "w");
    p.w1 = read_tensor(in, what, static_cast<Eigen::Index>(model.config.hidden), -1, "w1");
    p.b1 = read_tensor(in, what, static_cast<Eigen::Index>(model.config.hidden), 1, "b1");
    p.w2 = read_tensor(in, what, static_cast<Eigen::Index>(model.config.hidden), 1, "w2");
    p.b2 = read_tensor(in, what, 1, 1, "b2")(0, 0);
    model.concepts.centers = read_tensor(in, what, static_cast<Eigen::Index>(classes), p.w1.cols(), "concepts");
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError(what + ": trailing bytes");
    return model;
}

void write_rejection_csv(const std::filesystem::path& path, const TextAttributedGraph& graph,
                         const RejectionOutcome& outcome) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    csv::write_row(out, {"node_id", "prediction", "confidence", "entropy"});
    for (NodeIndex i = 0; i < outcome.size(); ++i) {
        const ClassId p = outcome.prediction[i];
        csv::write_row(out, {std::to_string(graph.node_id(i)),
                             p == kUnknown ? "UNKNOWN" : graph.class_names()[static_cast<std::size_t>(p)],
                             format_double(outcome.confidence[i]), format_double(outcome.entropy[i])});
    }
}

RejectionOutcome read_rejection_csv(const std::filesystem::path& path,
                                    const TextAttributedGraph& graph) {
    auto rows = csv::read_file(path, {"node_id", "prediction", "confidence", "entropy"});
    if (rows.size() != graph.node_count())
        throw DataError(path.string() + ": " + std::to_string(rows.size()) + " rows for " +
                        std::to_string(graph.node_count()) + " nodes");
    RejectionOutcome out;
    out.prediction.assign(graph.node_count(), kUnknown);
    out.confidence.assign(graph.node_count(), 0.0);
    out.entropy.assign(graph.node_count(), 0.0);
    std::vector<bool> seen(graph.node_count(), false);
    for (const auto& row : rows) {
        std::int64_t id = -1;
        std::from_chars(row[0].data(), row[0].data() + row[0].size(), id);
        auto idx = graph.index_of(id);
        if (!idx || seen[*idx]) throw DataError(path.string() + ": bad or repeated node_id " + row[0]);
        seen[*idx] = true;
        if (row[1] != "UNKNOWN") {
            auto c = graph.class_of(row[1]);
            if (!c) throw DataError(path.string() + ": unknown class `" + row[1] + "`");
            out.prediction[*idx] = *c;
        }
        parse_field({"confidence", &out.confidence[*idx]}, row[2]);
        parse_field({"entropy", &out.entropy[*idx]}, row[3]);
    }
    return out;
}

} // namespace oga::alt
