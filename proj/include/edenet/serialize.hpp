#pragma once

#include <string>
#include <vector>

#include "edenet/gpr_sim.hpp"
#include "edenet/network.hpp"

namespace edenet {

// GSF: "GPRS", version u32=1, S, D, C as u32, then S*D*C little-endian f32 in
// (frame, depth, channel) order. Poses travel in a sidecar CSV at
// path + ".poses.csv" with header frame,utm_x,utm_y and one row per frame.
void write_gsf(const GprSequence& seq, const std::string& path);
GprSequence read_gsf(const std::string& path);

// NTC: "NTC1", tensor_count u32; per tensor name_len u32, UTF-8 name,
// rank u32, dims u32[rank], little-endian f32 data; then a u32-length-prefixed
// UTF-8 JSON metadata block. read(write(x)) is bit-exact.
struct NamedTensor {
    std::string name;
    std::vector<int> dims;
    std::vector<float> data;
};

struct NtcFile {
    std::vector<NamedTensor> tensors;
    std::string metadata;
};

void write_ntc(const std::string& path, const std::vector<NamedTensor>& tensors,
               const std::string& metadata_json);
NtcFile read_ntc(const std::string& path);

// Checkpoint: the network's named parameters as NTC tensors with the
// NetConfig and step counter in the metadata. Parameters are f32-valued by
// construction, so a load reproduces descriptors bit-identically.
void save_checkpoint(const EdeNet& net, int step, const std::string& path);

struct LoadedCheckpoint {
    EdeNet net;
    int step = 0;

    explicit LoadedCheckpoint(EdeNet n) : net(std::move(n)) {}
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Descriptor sets: one NTC holding "descriptors" [N, d] and "frame_ids" [N],
// poses in the same CSV sidecar convention as GSF.
void save_descriptors(const std::vector<Descriptor>& descs, const std::string& path);
std::vector<Descriptor> load_descriptors(const std::string& path);

}  // namespace edenet
