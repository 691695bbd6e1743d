#include "edenet/serialize.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "edenet/config.hpp"
#include "edenet/errors.hpp"

namespace edenet {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                          (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
    out.write((const char*)b, 4);
}

void put_f32(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read((char*)b, 4);
    if (!in.good()) throw IoError("truncated file: " + path);
    return (std::uint32_t)b[0] | ((std::uint32_t)b[1] << 8) | ((std::uint32_t)b[2] << 16) |
           ((std::uint32_t)b[3] << 24);
}

float get_f32(std::istream& in, const std::string& path) {
    const std::uint32_t bits = get_u32(in, path);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::string pose_sidecar(const std::string& path) { return path + ".poses.csv"; }

void write_pose_csv(const std::vector<std::array<double, 2>>& poses,
                    const std::vector<int>& frame_ids, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw IoError("cannot write " + path);
    out << "frame,utm_x,utm_y\n";
    char line[96];
    for (std::size_t i = 0; i < poses.size(); ++i) {
        std::snprintf(line, sizeof(line), "%d,%.17g,%.17g\n", frame_ids[i], poses[i][0],
                      poses[i][1]);
        out << line;
    }
    if (!out.good()) throw IoError("write failed: " + path);
}

struct PoseRows {
    std::vector<int> frame_ids;
    std::vector<std::array<double, 2>> poses;
};

PoseRows read_pose_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "frame,utm_x,utm_y")
        throw IoError("bad pose CSV header in " + path);
    PoseRows rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int frame = 0;
        double x = 0.0, y = 0.0;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf", &frame, &x, &y) != 3)
            throw IoError("bad pose CSV row in " + path + ": " + line);
        rows.frame_ids.push_back(frame);
        rows.poses.push_back({x, y});
    }
    return rows;
}

}  // namespace

void write_gsf(const GprSequence& seq, const std::string& path) {
    if (seq.S < 1 || seq.D < 1 || seq.C < 1) throw UsageError("write_gsf: empty sequence");
    if ((int)seq.poses.size() != seq.S)
        throw DimensionError("write_gsf: " + std::to_string(seq.poses.size()) + " poses for " +
                             std::to_string(seq.S) + " frames");
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw IoError("cannot write " + path);
    out.write("GPRS", 4);
    put_u32(out, 1);
    put_u32(out, (std::uint32_t)seq.S);
    put_u32(out, (std::uint32_t)seq.D);
    put_u32(out, (std::uint32_t)seq.C);
    for (double v : seq.frames) put_f32(out, (float)v);
    if (!out.good()) throw IoError("write failed: " + path);
    out.close();

    std::vector<int> ids((std::size_t)seq.S);
    for (int i = 0; i < seq.S; ++i) ids[(std::size_t)i] = i;
    write_pose_csv(seq.poses, ids, pose_sidecar(path));
}

GprSequence read_gsf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw IoError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in.good() || std::memcmp(magic, "GPRS", 4) != 0)
        throw IoError("not a GSF file: " + path);
    const std::uint32_t version = get_u32(in, path);
    if (version != 1) throw IoError("unsupported GSF version " + std::to_string(version));
    GprSequence seq;
    seq.S = (int)get_u32(in, path);
    seq.D = (int)get_u32(in, path);
    seq.C = (int)get_u32(in, path);
    if (seq.S < 1 || seq.D < 1 || seq.C < 1) throw IoError("bad GSF dimensions in " + path);
    const std::size_t n = (std::size_t)seq.S * seq.D * seq.C;
    seq.frames.resize(n);
    for (auto& v : seq.frames) v = (double)get_f32(in, path);
    in.get();
    if (!in.eof()) throw IoError("trailing bytes in " + path);

    auto rows = read_pose_csv(pose_sidecar(path));
    if ((int)rows.poses.size() != seq.S)
        throw IoError("pose CSV has " + std::to_string(rows.poses.size()) + " rows for " +
                      std::to_string(seq.S) + " frames: " + pose_sidecar(path));
    seq.poses = std::move(rows.poses);
    return seq;
}

void write_ntc(const std::string& path, const std::vector<NamedTensor>& tensors,
               const std::string& metadata_json) {
    for (const auto& t : tensors) {
        std::size_t n = 1;
        for (int d : t.dims) {
            if (d < 1) throw DimensionError("write_ntc: non-positive dim in " + t.name);
            n *= (std::size_t)d;
        }
        if (t.dims.empty() || n != t.data.size())
            throw DimensionError("write_ntc: dims of " + t.name + " imply " + std::to_string(n) +
                                 " values, got " + std::to_string(t.data.size()));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw IoError("cannot write " + path);
    out.write("NTC1", 4);
    put_u32(out, (std::uint32_t)tensors.size());
    for (const auto& t : tensors) {
        put_u32(out, (std::uint32_t)t.name.size());
        out.write(t.name.data(), (std::streamsize)t.name.size());
        put_u32(out, (std::uint32_t)t.dims.size());
        for (int d : t.dims) put_u32(out, (std::uint32_t)d);
        for (float v : t.data) put_f32(out, v);
    }
    put_u32(out, (std::uint32_t)metadata_json.size());
    out.write(metadata_json.data(), (std::streamsize)metadata_json.size());
    if (!out.good()) throw IoError("write failed: " + path);
}

NtcFile read_ntc(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw IoError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in.good() || std::memcmp(magic, "NTC1", 4) != 0)
        throw IoError("not an NTC file: " + path);
    NtcFile file;
    const std::uint32_t count = get_u32(in, path);
    file.tensors.resize(count);
    for (auto& t : file.tensors) {
        const std::uint32_t name_len = get_u32(in, path);
        if (name_len > 4096) throw IoError("implausible tensor name length in " + path);
        t.name.resize(name_len);
        in.read(t.name.data(), name_len);
        if (!in.good()) throw IoError("truncated file: " + path);
        const std::uint32_t rank = get_u32(in, path);
        if (rank < 1 || rank > 8) throw IoError("implausible tensor rank in " + path);
        t.dims.resize(rank);
        std::size_t n = 1;
        for (auto& d : t.dims) {
            d = (int)get_u32(in, path);
            if (d < 1) throw IoError("bad tensor dim in " + path);
            n *= (std::size_t)d;
        }
        t.data.resize(n);
        for (auto& v : t.data) v = get_f32(in, path);
    }
    const std::uint32_t meta_len = get_u32(in, path);
    file.metadata.resize(meta_len);
    in.read(file.metadata.data(), meta_len);
    if (!in.good() && meta_len > 0) throw IoError("truncated file: " + path);
    in.get();
    if (!in.eof()) throw IoError("trailing bytes in " + path);
    return file;
}

void save_checkpoint(const EdeNet& net, int step, const std::string& path) {
    std::vector<NamedTensor> tensors;
    for (const auto& [name, p] : net.named_params()) {
        NamedTensor t;
        t.name = name;
        t.dims = p->shape;
        t.data.reserve(p->data.size());
        for (double v : p->data) t.data.push_back((float)v);
        tensors.push_back(std::move(t));
    }
    nlohmann::ordered_json meta;
    meta["kind"] = "checkpoint";
    meta["step"] = step;
    meta["network"] = nlohmann::ordered_json::parse(net_config_to_json(net.cfg));
    write_ntc(path, tensors, meta.dump());
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    auto file = read_ntc(path);
    nlohmann::ordered_json meta;
    try {
        meta = nlohmann::ordered_json::parse(file.metadata);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad checkpoint metadata in " + path + ": " + e.what());
    }
    if (meta.value("kind", "") != std::string("checkpoint"))
        throw ConfigError("not a checkpoint: " + path);
    if (!meta.contains("network") || !meta.contains("step"))
        throw ConfigError("checkpoint metadata incomplete in " + path);
    NetConfig cfg = net_config_from_json(meta["network"].dump());

    LoadedCheckpoint out{EdeNet(cfg, 0)};
    out.step = meta["step"].get<int>();
    auto named = out.net.named_params();
    if (named.size() != file.tensors.size())
        throw ConfigError("checkpoint " + path + " holds " + std::to_string(file.tensors.size()) +
                          " tensors, network expects " + std::to_string(named.size()));
    for (std::size_t i = 0; i < named.size(); ++i) {
        const auto& [name, p] = named[i];
        const auto& t = file.tensors[i];
        if (t.name != name)
            throw ConfigError("checkpoint tensor " + std::to_string(i) + " is \"" + t.name +
                              "\", expected \"" + name + "\"");
        if (t.dims != p->shape || t.data.size() != p->data.size())
            throw DimensionError("checkpoint tensor " + name + " has the wrong shape");
        for (std::size_t j = 0; j < t.data.size(); ++j) p->data[j] = (double)t.data[j];
    }
    return out;
}

void save_descriptors(const std::vector<Descriptor>& descs, const std::string& path) {
    if (descs.empty()) throw UsageError("save_descriptors: empty set");
    const int n = (int)descs.size();
    const int dim = (int)descs[0].values.size();
    NamedTensor mat;
    mat.name = "descriptors";
    mat.dims = {n, dim};
    mat.data.reserve((std::size_t)n * dim);
    NamedTensor ids;
    ids.name = "frame_ids";
    ids.dims = {n};
    ids.data.reserve((std::size_t)n);
    std::vector<std::array<double, 2>> poses;
    std::vector<int> frame_ids;
    for (const auto& d : descs) {
        if ((int)d.values.size() != dim)
            throw DimensionError("save_descriptors: mixed descriptor dims");
        for (double v : d.values) mat.data.push_back((float)v);
        ids.data.push_back((float)d.frame_id);
        poses.push_back(d.pose);
        frame_ids.push_back(d.frame_id);
    }
    nlohmann::ordered_json meta;
    meta["kind"] = "descriptors";
    meta["count"] = n;
    meta["dim"] = dim;
    write_ntc(path, {mat, ids}, meta.dump());
    write_pose_csv(poses, frame_ids, pose_sidecar(path));
}

std::vector<Descriptor> load_descriptors(const std::string& path) {
    auto file = read_ntc(path);
    if (file.tensors.size() != 2 || file.tensors[0].name != "descriptors" ||
        file.tensors[1].name != "frame_ids")
        throw IoError("not a descriptor file: " + path);
    const auto& mat = file.tensors[0];
    const auto& ids = file.tensors[1];
    if (mat.dims.size() != 2 || ids.dims.size() != 1 || ids.dims[0] != mat.dims[0])
        throw IoError("bad descriptor tensor shapes in " + path);
    const int n = mat.dims[0], dim = mat.dims[1];
    auto rows = read_pose_csv(pose_sidecar(path));
    if ((int)rows.poses.size() != n)
        throw IoError("pose CSV row count mismatch for " + path);
    std::vector<Descriptor> out((std::size_t)n);
    for (int i = 0; i < n; ++i) {
        auto& d = out[(std::size_t)i];
        d.values.resize((std::size_t)dim);
        for (int j = 0; j < dim; ++j)
            d.values[(std::size_t)j] = (double)mat.data[(std::size_t)i * dim + j];
        d.frame_id = (int)ids.data[(std::size_t)i];
        d.pose = rows.poses[(std::size_t)i];
    }
    return out;
}

}  // namespace edenet
