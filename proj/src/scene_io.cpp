// Copyright Contributors to the splatvox project
// SPDX-License-Identifier: Apache-2.0

#include "splatvox/scene_io.hpp"

#include "splatvox/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace splatvox {

namespace {

using nlohmann::json;

constexpr std::string_view kSceneFormatName = "splatvox-scene";
constexpr std::array<std::uint8_t, 4> kGridMagic{'S', 'S', 'C', 'G'};

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const json& j, const char* field) {
    if (!j.is_array() || j.size() != 3)
        throw FormatError(std::string("field '") + field + "' must be an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t b = 0; b < sizeof(U); ++b)
        out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
    U bits = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b)
        bits |= static_cast<U>(static_cast<U>(bytes[offset + b]) << (8 * b));
    return std::bit_cast<T>(bits);
}

void expect_kind(const GridFile& file, GridKind kind, const char* what) {
    if (file.kind != kind)
        throw FormatError(std::string("grid file does not hold ") + what);
}

VoxelGridSpec spec_of(const GridFile& file) {
    VoxelGridSpec spec;
    spec.origin = file.origin;
    spec.voxel_size = file.voxel_size;
    spec.dims = {file.dims[0], file.dims[1], file.dims[2]};
    try {
        spec.validate();
    } catch (const InvalidInput& e) {
        throw FormatError(std::string("grid file geometry: ") + e.what());
    }
    return spec;
}

GridFile header_from(const VoxelGridSpec& spec, GridKind kind, std::uint32_t channels) {
    GridFile f;
    f.kind = kind;
    f.dims = {spec.dims[0], spec.dims[1], spec.dims[2], channels};
    f.origin = spec.origin;
    f.voxel_size = spec.voxel_size;
    return f;
}

std::vector<std::uint8_t> f32_payload(std::span<const double> values) {
    std::vector<std::uint8_t> out;
    out.reserve(values.size() * 4);
    for (double v : values)
        put_le(out, static_cast<float>(v));
    return out;
}

std::vector<double> f32_values(const GridFile& file) {
    std::vector<double> out(file.element_count());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = get_le<float>(file.payload, 4 * i);
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Scenes

std::string scene_to_json(const Scene& scene) {
    json prims = json::array();
    for (const auto& g : scene.primitives) {
        const Quat& q = g.rotation();
        prims.push_back({{"mean", vec3_json(g.mean())},
                         {"scale", vec3_json(g.scale())},
                         {"rotation", json::array({q.w, q.x, q.y, q.z})},
                         {"opacity", g.opacity()},
                         {"logits", g.semantic_logits()}});
    }
    json doc = {{"format", kSceneFormatName},
                {"version", kSceneFormatVersion},
                {"num_classes", scene.num_classes},
                {"count", scene.primitives.size()},
                {"primitives", std::move(prims)}};
    return doc.dump(1) + "\n";
}

Scene scene_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("scene file is not valid JSON: ") + e.what());
    }
    try {
        if (doc.value("format", std::string{}) != kSceneFormatName)
            throw FormatError("scene file has an unknown format tag");
        const int version = doc.at("version").get<int>();
        if (version != kSceneFormatVersion)
            throw FormatError("unsupported scene file version " + std::to_string(version));

        Scene scene;
        scene.num_classes = doc.at("num_classes").get<std::size_t>();
        if (scene.num_classes < 2 || scene.num_classes > 256)
            throw FormatError("scene num_classes must lie in [2, 256]");
        const auto count = doc.at("count").get<std::size_t>();
        const json& prims = doc.at("primitives");
        if (!prims.is_array() || prims.size() != count)
            throw FormatError("scene record count does not match the header");

        scene.primitives.reserve(count);
        for (const json& p : prims) {
            const json& r = p.at("rotation");
            if (!r.is_array() || r.size() != 4)
                throw FormatError("field 'rotation' must be an array of 4 numbers");
            auto logits = p.at("logits").get<std::vector<double>>();
            if (logits.size() != scene.num_classes - 1)
                throw FormatError("primitive logits must have num_classes - 1 entries");
            scene.primitives.emplace_back(
                vec3_from(p.at("mean"), "mean"), vec3_from(p.at("scale"), "scale"),
                Quat{r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()},
                p.at("opacity").get<double>(), std::move(logits));
        }
        return scene;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed scene file: ") + e.what());
    } catch (const InvalidInput& e) {
        throw FormatError(std::string("invalid primitive in scene file: ") + e.what());
    }
}

void write_scene(const std::filesystem::path& path, const Scene& scene) {
    const std::string text = scene_to_json(scene);
    write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

Scene read_scene(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    return scene_from_json(std::string(bytes.begin(), bytes.end()));
}

// ---------------------------------------------------------------------------
// Grids

std::size_t GridFile::element_count() const {
    return std::size_t{dims[0]} * dims[1] * dims[2] * dims[3];
}

std::vector<std::uint8_t> encode_grid(const GridFile& grid) {
    if (grid.payload.size() != grid.element_count() * grid.element_size())
        throw InvalidInput("grid payload length does not match its dims");
    std::vector<std::uint8_t> out;
    out.reserve(kGridHeaderBytes + grid.payload.size());
    for (std::uint8_t b : kGridMagic)
        out.push_back(b);
    put_le(out, kGridFormatVersion);
    put_le(out, static_cast<std::uint16_t>(grid.kind));
    for (std::uint32_t d : grid.dims)
        put_le(out, d);
    put_le(out, grid.origin.x());
    put_le(out, grid.origin.y());
    put_le(out, grid.origin.z());
    put_le(out, grid.voxel_size);
    out.insert(out.end(), grid.payload.begin(), grid.payload.end());
    return out;
}

GridFile decode_grid(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kGridHeaderBytes)
        throw FormatError("grid file is shorter than its header");
    if (!std::equal(kGridMagic.begin(), kGridMagic.end(), bytes.begin()))
        throw FormatError("grid file has bad magic bytes");
    const auto version = get_le<std::uint16_t>(bytes, 4);
    if (version != kGridFormatVersion)
        throw FormatError("unsupported grid file version " + std::to_string(version));
    const auto kind = get_le<std::uint16_t>(bytes, 6);
    if (kind > static_cast<std::uint16_t>(GridKind::Depth))
        throw FormatError("unknown grid element kind " + std::to_string(kind));

    GridFile g;
    g.kind = static_cast<GridKind>(kind);
    for (std::size_t d = 0; d < 4; ++d)
        g.dims[d] = get_le<std::uint32_t>(bytes, 8 + 4 * d);
    g.origin = Vec3(get_le<double>(bytes, 24), get_le<double>(bytes, 32), get_le<double>(bytes, 40));
    g.voxel_size = get_le<double>(bytes, 48);

    // Guard the size product against overflow before comparing lengths.
    long double expected = static_cast<long double>(g.element_size());
    for (std::uint32_t d : g.dims)
        expected *= d;
    if (expected != static_cast<long double>(bytes.size() - kGridHeaderBytes))
        throw FormatError("grid payload length does not match its dims");
    g.payload.assign(bytes.begin() + kGridHeaderBytes, bytes.end());
    return g;
}

void write_grid_file(const std::filesystem::path& path, const GridFile& grid) {
    write_bytes(path, encode_grid(grid));
}

GridFile read_grid_file(const std::filesystem::path& path) { return decode_grid(read_bytes(path)); }

GridFile to_grid_file(const LabelGrid& labels) {
    GridFile f = header_from(labels.spec, GridKind::Label, 1);
    f.payload = labels.labels;
    return f;
}

GridFile to_grid_file(const SemanticProbGrid& probs) {
    GridFile f = header_from(probs.spec(), GridKind::Probability,
                             static_cast<std::uint32_t>(probs.num_classes()));
    f.payload = f32_payload(probs.data());
    return f;
}

GridFile to_grid_file(const DepthMap& depth) {
    if (depth.depth.size() != std::size_t{depth.width} * depth.height)
        throw InvalidInput("depth map size does not match its dims");
    GridFile f;
    f.kind = GridKind::Depth;
    f.dims = {depth.height, depth.width, 1, 1};
    f.voxel_size = 1.0;
    f.payload = f32_payload(depth.depth);
    return f;
}

LabelGrid label_grid_from(const GridFile& file) {
    expect_kind(file, GridKind::Label, "labels");
    if (file.dims[3] != 1)
        throw FormatError("label grid must have one channel");
    LabelGrid g(spec_of(file));
    g.labels = file.payload;
    return g;
}

SemanticProbGrid prob_grid_from(const GridFile& file) {
    expect_kind(file, GridKind::Probability, "probabilities");
    if (file.dims[3] < 2 || file.dims[3] > 256)
        throw FormatError("probability grid must have 2..256 channels");
    SemanticProbGrid g(spec_of(file), file.dims[3]);
    g.data() = f32_values(file);
    return g;
}

DepthMap depth_map_from(const GridFile& file) {
    expect_kind(file, GridKind::Depth, "a depth map");
    if (file.dims[2] != 1 || file.dims[3] != 1 || file.dims[0] == 0 || file.dims[1] == 0)
        throw FormatError("depth map must have dims (height, width, 1, 1)");
    DepthMap d;
    d.height = file.dims[0];
    d.width = file.dims[1];
    d.depth = f32_values(file);
    return d;
}

LabelGrid labels_from_any(const GridFile& file) {
    if (file.kind == GridKind::Probability)
        return argmax_labels(prob_grid_from(file));
    return label_grid_from(file);
}

// ---------------------------------------------------------------------------
// Attention weights

namespace {

constexpr std::string_view kTensorFormatName = "splatvox-tensors";

json matrix_json(const Matrix& m) {
    return {{"shape", json::array({m.rows, m.cols})}, {"data", m.data}};
}

Matrix matrix_from(const json& j, const char* name) {
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2)
        throw FormatError(std::string("tensor '") + name + "' must be two-dimensional");
    Matrix m(shape[0], shape[1]);
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != shape[0] * shape[1])
        throw FormatError(std::string("tensor '") + name + "' data length does not match its shape");
    return m;
}

} // namespace

std::string gca_weights_to_json(const GcaWeights& w) {
    json tensors = {{"w_q", matrix_json(w.w_q)},
                    {"w_k", matrix_json(w.w_k)},
                    {"w_v", matrix_json(w.w_v)},
                    {"w_o", matrix_json(w.w_o)},
                    {"w_a", {{"shape", json::array({w.w_a.size()})}, {"data", w.w_a}}}};
    json doc = {{"format", kTensorFormatName},
                {"version", 1},
                {"groups", w.groups},
                {"tensors", std::move(tensors)}};
    return doc.dump() + "\n";
}

GcaWeights gca_weights_from_json(const std::string& text) {
    try {
        const json doc = json::parse(text);
        if (doc.value("format", std::string{}) != kTensorFormatName)
            throw FormatError("tensor file has an unknown format tag");
        if (doc.at("version").get<int>() != 1)
            throw FormatError("unsupported tensor file version");
        const json& t = doc.at("tensors");
        GcaWeights w;
        w.groups = doc.at("groups").get<std::size_t>();
        w.w_q = matrix_from(t.at("w_q"), "w_q");
        w.w_k = matrix_from(t.at("w_k"), "w_k");
        w.w_v = matrix_from(t.at("w_v"), "w_v");
        w.w_o = matrix_from(t.at("w_o"), "w_o");
        const json& a = t.at("w_a");
        const auto shape = a.at("shape").get<std::vector<std::size_t>>();
        w.w_a = a.at("data").get<std::vector<double>>();
        if (shape.size() != 1 || shape[0] != w.w_a.size())
            throw FormatError("tensor 'w_a' data length does not match its shape");
        w.validate();
        return w;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed tensor file: ") + e.what());
    } catch (const InvalidInput& e) {
        throw FormatError(std::string("inconsistent tensor file: ") + e.what());
    }
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open '" + path.string() + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad())
        throw FormatError("failed to read '" + path.string() + "'");
    return bytes;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw FormatError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw FormatError("failed to write '" + path.string() + "'");
}

} // namespace splatvox
