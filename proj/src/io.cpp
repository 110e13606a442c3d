// SPDX-License-Identifier: Apache-2.0

#include "kdc/io.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace kdc {

namespace {

void append_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw data_error("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

void write_all(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw data_error("cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw data_error("short write to " + path.string());
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

double parse_double(std::string_view s, const std::string& where) {
    std::string buf(s);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || buf.empty()) {
        throw config_error(where + ": cannot parse number '" + buf + "'");
    }
    return v;
}

long long parse_int(std::string_view s, const std::string& where) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw config_error(where + ": cannot parse integer '" + std::string(s) + "'");
    }
    return v;
}

std::vector<int> parse_int_list(std::string_view s, const std::string& where) {
    std::vector<int> out;
    std::size_t start = 0;
    const std::string str(s);
    while (start <= str.size()) {
        std::size_t comma = str.find(',', start);
        if (comma == std::string::npos) comma = str.size();
        out.push_back(static_cast<int>(
            parse_int(trim(std::string_view(str).substr(start, comma - start)), where)));
        start = comma + 1;
        if (comma == str.size()) break;
    }
    if (out.empty()) {
        throw config_error(where + ": empty list");
    }
    return out;
}

std::string join_ints(const std::vector<int>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(xs[i]);
    }
    return out;
}

} // namespace

void write_feature_file(const std::filesystem::path& path, const Tensor& tensor) {
    const auto& shape = tensor.shape();
    if (shape.empty() || shape.size() > 255) {
        throw data_error("feature file: unsupported rank " + std::to_string(shape.size()));
    }
    std::string bytes;
    bytes.reserve(6 + 4 * shape.size() + 4 * tensor.size());
    bytes += "KDCF";
    bytes.push_back(1); // format version
    bytes.push_back(static_cast<char>(shape.size()));
    for (std::size_t d : shape) {
        if (d > UINT32_MAX) {
            throw data_error("feature file: dimension too large");
        }
        append_u32_le(bytes, static_cast<std::uint32_t>(d));
    }
    for (double v : tensor.values()) {
        const float f = static_cast<float>(v);
        std::uint32_t u = 0;
        std::memcpy(&u, &f, 4);
        append_u32_le(bytes, u);
    }
    write_all(path, bytes);
}

Tensor read_feature_file(const std::filesystem::path& path) {
    const std::string bytes = read_all(path);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 6 || std::memcmp(p, "KDCF", 4) != 0) {
        throw data_error(path.string() + ": not a KDCF feature file");
    }
    if (p[4] != 1) {
        throw data_error(path.string() + ": unsupported format version " +
                         std::to_string(p[4]));
    }
    const std::size_t rank = p[5];
    if (bytes.size() < 6 + 4 * rank) {
        throw data_error(path.string() + ": truncated header");
    }
    Shape shape(rank);
    std::size_t count = 1;
    for (std::size_t i = 0; i < rank; ++i) {
        shape[i] = read_u32_le(p + 6 + 4 * i);
        count *= shape[i];
    }
    const std::size_t payload_at = 6 + 4 * rank;
    if (bytes.size() != payload_at + 4 * count) {
        throw data_error(path.string() + ": payload size " +
                         std::to_string(bytes.size() - payload_at) + " does not match dims (" +
                         std::to_string(4 * count) + " expected)");
    }
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t u = read_u32_le(p + payload_at + 4 * i);
        float f = 0.0f;
        std::memcpy(&f, &u, 4);
        values[i] = static_cast<double>(f);
    }
    return Tensor::from(std::move(shape), std::move(values));
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& path) {
    const std::string text = read_all(path);
    std::vector<std::vector<double>> rows;
    std::size_t line_start = 0;
    std::size_t row_no = 0;
    while (line_start < text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string::npos) line_end = text.size();
        std::string_view line = trim(std::string_view(text).substr(line_start, line_end - line_start));
        ++row_no;
        if (!line.empty()) {
            std::vector<double> row;
            std::size_t col_no = 0;
            std::size_t field_start = 0;
            const std::string l(line);
            while (field_start <= l.size()) {
                std::size_t comma = l.find(',', field_start);
                if (comma == std::string::npos) comma = l.size();
                ++col_no;
                const std::string field(trim(std::string_view(l).substr(field_start, comma - field_start)));
                char* end = nullptr;
                const double v = std::strtod(field.c_str(), &end);
                if (field.empty() || end != field.c_str() + field.size()) {
                    throw data_error(path.string() + ": row " + std::to_string(row_no) +
                                     ", column " + std::to_string(col_no) +
                                     ": cannot parse '" + field + "'");
                }
                row.push_back(v);
                field_start = comma + 1;
                if (comma == l.size()) break;
            }
            rows.push_back(std::move(row));
        }
        line_start = line_end + 1;
    }
    return rows;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += format_double(row[i]);
        }
        out += "\n";
    }
    write_all(path, out);
}

std::string format_double(double v) {
    // shortest representation that parses back to the same double
    for (int prec = 1; prec <= 17; ++prec) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) {
            return buf;
        }
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ExperimentConfig ExperimentConfig::parse_file(const std::filesystem::path& path) {
    return parse_string(read_all(path), path.string());
}

ExperimentConfig ExperimentConfig::parse_string(std::string_view text,
                                                const std::string& origin) {
    ExperimentConfig cfg;
    std::size_t line_start = 0;
    std::size_t line_no = 0;
    const std::string s(text);
    while (line_start <= s.size()) {
        std::size_t line_end = s.find('\n', line_start);
        if (line_end == std::string::npos) line_end = s.size();
        ++line_no;
        std::string_view line = std::string_view(s).substr(line_start, line_end - line_start);
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (!line.empty()) {
            const std::size_t eq = line.find('=');
            const std::string where = origin + ": line " + std::to_string(line_no);
            if (eq == std::string_view::npos) {
                throw config_error(where + ": expected 'key = value'");
            }
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            if (key.empty() || value.empty()) {
                throw config_error(where + ": expected 'key = value'");
            }
            try {
                cfg.set(key, value);
            } catch (const config_error& e) {
                throw config_error(where + ": " + e.what());
            }
        }
        if (line_end == s.size()) break;
        line_start = line_end + 1;
    }
    return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key == "learning_rate") {
        train.learning_rate = parse_double(value, key);
    } else if (key == "epochs") {
        train.epochs = static_cast<int>(parse_int(value, key));
    } else if (key == "batch_size") {
        train.batch_size = static_cast<int>(parse_int(value, key));
    } else if (key == "margin") {
        train.margin = parse_double(value, key);
    } else if (key == "temperature") {
        train.temperature = parse_double(value, key);
    } else if (key == "gamma") {
        train.distill_decay = parse_double(value, key);
    } else if (key == "w0") {
        train.distill_weight = parse_double(value, key);
    } else if (key == "delta") {
        train.fusion_delta = parse_double(value, key);
    } else if (key == "krd_window") {
        train.krd_window = static_cast<int>(parse_int(value, key));
    } else if (key == "seed") {
        train.seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else if (key == "heads") {
        hyper.heads = static_cast<int>(parse_int(value, key));
    } else if (key == "scales") {
        hyper.scales = parse_int_list(value, key);
    } else if (key == "r_max") {
        hyper.max_offset = static_cast<int>(parse_int(value, key));
    } else if (key == "radii") {
        hyper.radii = parse_int_list(value, key);
    } else if (key == "lambda") {
        hyper.pn_lambda = parse_double(value, key);
    } else {
        throw config_error("unknown key '" + key + "'");
    }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
    return {
        {"learning_rate", format_double(train.learning_rate)},
        {"epochs", std::to_string(train.epochs)},
        {"batch_size", std::to_string(train.batch_size)},
        {"margin", format_double(train.margin)},
        {"temperature", format_double(train.temperature)},
        {"gamma", format_double(train.distill_decay)},
        {"w0", format_double(train.distill_weight)},
        {"delta", format_double(train.fusion_delta)},
        {"krd_window", std::to_string(train.krd_window)},
        {"seed", std::to_string(train.seed)},
        {"heads", std::to_string(hyper.heads)},
        {"scales", join_ints(hyper.scales)},
        {"r_max", std::to_string(hyper.max_offset)},
        {"radii", join_ints(hyper.radii)},
        {"lambda", format_double(hyper.pn_lambda)},
    };
}

// ---- dataset directories ---------------------------------------------------

namespace {

std::map<std::string, std::string> parse_manifest(const std::filesystem::path& path) {
    const std::string text = read_all(path);
    std::map<std::string, std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string_view line = trim(std::string_view(text).substr(start, end - start));
        if (!line.empty() && line.front() != '#') {
            const std::size_t eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw data_error(path.string() + ": bad manifest line '" + std::string(line) + "'");
            }
            out.emplace(std::string(trim(line.substr(0, eq))),
                        std::string(trim(line.substr(eq + 1))));
        }
        if (end == text.size()) break;
        start = end + 1;
    }
    return out;
}

const std::string& manifest_get(const std::map<std::string, std::string>& m,
                                const std::string& key, const std::filesystem::path& path) {
    auto it = m.find(key);
    if (it == m.end()) {
        throw data_error(path.string() + ": missing manifest key '" + key + "'");
    }
    return it->second;
}

Tensor pack_items(const std::vector<Tensor>& items) {
    std::vector<double> flat;
    const Shape& inner = items.front().shape();
    std::size_t per = items.front().size();
    flat.reserve(items.size() * per);
    for (const auto& t : items) {
        flat.insert(flat.end(), t.values().begin(), t.values().end());
    }
    Shape shape{items.size()};
    shape.insert(shape.end(), inner.begin(), inner.end());
    return Tensor::from(std::move(shape), std::move(flat));
}

std::vector<Tensor> unpack_items(const Tensor& packed) {
    const Shape& s = packed.shape();
    const std::size_t n = s[0];
    Shape inner(s.begin() + 1, s.end());
    std::size_t per = 1;
    for (std::size_t d : inner) per *= d;
    std::vector<Tensor> out;
    out.reserve(n);
    const auto vals = packed.values();
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(Tensor::from(inner, {vals.begin() + i * per, vals.begin() + (i + 1) * per}));
    }
    return out;
}

} // namespace

void write_dataset(const std::filesystem::path& dir, const RetrievalDataset& data) {
    std::filesystem::create_directories(dir);
    std::string manifest;
    manifest += "count = " + std::to_string(data.size()) + "\n";
    manifest += "frames = " + std::to_string(data.frames) + "\n";
    manifest += "dim = " + std::to_string(data.dim) + "\n";
    manifest += "teacher_dim = " + std::to_string(data.teacher_dim) + "\n";
    manifest += "query_len = " + std::to_string(data.query_len) + "\n";
    write_all(dir / "manifest.txt", manifest);

    write_feature_file(dir / "queries.kdcf", pack_items(data.queries));
    write_feature_file(dir / "videos.kdcf", pack_items(data.videos));
    write_feature_file(dir / "teacher_frames.kdcf", pack_items(data.teacher_frames));
    write_feature_file(dir / "teacher_queries.kdcf", pack_items(data.teacher_queries));

    std::vector<std::vector<double>> pairs;
    for (std::size_t i = 0; i < data.size(); ++i) {
        pairs.push_back({static_cast<double>(i), data.mv_ratios[i],
                         static_cast<double>(data.moment_starts[i]),
                         static_cast<double>(data.moment_lengths[i])});
    }
    write_csv(dir / "pairs.csv", pairs);
}

RetrievalDataset read_dataset(const std::filesystem::path& dir) {
    const auto manifest = parse_manifest(dir / "manifest.txt");
    RetrievalDataset data;
    const auto count = static_cast<std::size_t>(
        parse_int(manifest_get(manifest, "count", dir), "count"));
    data.frames = static_cast<std::size_t>(
        parse_int(manifest_get(manifest, "frames", dir), "frames"));
    data.dim = static_cast<std::size_t>(parse_int(manifest_get(manifest, "dim", dir), "dim"));
    data.teacher_dim = static_cast<std::size_t>(
        parse_int(manifest_get(manifest, "teacher_dim", dir), "teacher_dim"));
    data.query_len = static_cast<std::size_t>(
        parse_int(manifest_get(manifest, "query_len", dir), "query_len"));

    data.queries = unpack_items(read_feature_file(dir / "queries.kdcf"));
    data.videos = unpack_items(read_feature_file(dir / "videos.kdcf"));
    data.teacher_frames = unpack_items(read_feature_file(dir / "teacher_frames.kdcf"));
    data.teacher_queries = unpack_items(read_feature_file(dir / "teacher_queries.kdcf"));

    const auto pairs = read_csv(dir / "pairs.csv");
    if (pairs.size() != count || data.queries.size() != count ||
        data.videos.size() != count || data.teacher_frames.size() != count ||
        data.teacher_queries.size() != count) {
        throw data_error(dir.string() + ": manifest count " + std::to_string(count) +
                         " does not match stored items");
    }
    for (const auto& row : pairs) {
        if (row.size() != 4) {
            throw data_error(dir.string() + "/pairs.csv: expected 4 columns");
        }
        data.mv_ratios.push_back(row[1]);
        data.moment_starts.push_back(static_cast<int>(row[2]));
        data.moment_lengths.push_back(static_cast<int>(row[3]));
    }
    return data;
}

// ---- checkpoints -------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& dir, const StudentModel& model,
                     const TrainConfig& cfg) {
    std::filesystem::create_directories(dir);
    std::string manifest;
    manifest += "dim = " + std::to_string(model.dim) + "\n";
    manifest += "heads = " + std::to_string(model.hyper.heads) + "\n";
    manifest += "scales = " + join_ints(model.hyper.scales) + "\n";
    manifest += "r_max = " + std::to_string(model.hyper.max_offset) + "\n";
    manifest += "radii = " + join_ints(model.hyper.radii) + "\n";
    manifest += "lambda = " + format_double(model.hyper.pn_lambda) + "\n";
    manifest += "delta = " + format_double(cfg.fusion_delta) + "\n";
    manifest += "krd_window = " + std::to_string(cfg.krd_window) + "\n";

    const auto params = model.named_params();
    manifest += "params = " + std::to_string(params.size()) + "\n";
    std::size_t index = 0;
    for (const auto& [name, tensor] : params) {
        char file[32];
        std::snprintf(file, sizeof file, "p%03zu.kdcf", index);
        manifest += "param" + std::to_string(index) + " = " + name + " " + file + "\n";
        write_feature_file(dir / file, tensor);
        ++index;
    }
    write_all(dir / "manifest.txt", manifest);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
    const auto manifest = parse_manifest(dir / "manifest.txt");
    ModelHyper hyper;
    hyper.heads = static_cast<int>(parse_int(manifest_get(manifest, "heads", dir), "heads"));
    hyper.scales = parse_int_list(manifest_get(manifest, "scales", dir), "scales");
    hyper.max_offset = static_cast<int>(parse_int(manifest_get(manifest, "r_max", dir), "r_max"));
    hyper.radii = parse_int_list(manifest_get(manifest, "radii", dir), "radii");
    hyper.pn_lambda = parse_double(manifest_get(manifest, "lambda", dir), "lambda");

    const auto dim = static_cast<std::size_t>(
        parse_int(manifest_get(manifest, "dim", dir), "dim"));
    LoadedCheckpoint out{StudentModel::init(dim, hyper, 0), TrainConfig{}};
    out.train.fusion_delta = parse_double(manifest_get(manifest, "delta", dir), "delta");
    out.train.krd_window = static_cast<int>(
        parse_int(manifest_get(manifest, "krd_window", dir), "krd_window"));

    std::map<std::string, Tensor> by_name;
    for (auto& [name, tensor] : out.model.named_params()) {
        by_name.emplace(name, tensor);
    }
    const auto count = static_cast<std::size_t>(
        parse_int(manifest_get(manifest, "params", dir), "params"));
    if (count != by_name.size()) {
        throw data_error(dir.string() + ": checkpoint has " + std::to_string(count) +
                         " params, model expects " + std::to_string(by_name.size()));
    }
    for (std::size_t i = 0; i < count; ++i) {
        const std::string& entry = manifest_get(manifest, "param" + std::to_string(i), dir);
        const std::size_t space = entry.rfind(' ');
        if (space == std::string::npos) {
            throw data_error(dir.string() + ": bad param entry '" + entry + "'");
        }
        const std::string name = entry.substr(0, space);
        const std::string file = entry.substr(space + 1);
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw data_error(dir.string() + ": unexpected parameter '" + name + "'");
        }
        Tensor stored = read_feature_file(dir / file);
        if (stored.shape() != it->second.shape()) {
            throw dimension_error(dir.string() + ": parameter '" + name + "' has shape " +
                                  std::to_string(stored.size()) + ", expected " +
                                  std::to_string(it->second.size()));
        }
        it->second.load_values(stored.values());
    }
    return out;
}

} // namespace kdc
