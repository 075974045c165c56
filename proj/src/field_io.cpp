#include <cstring>
#include <fstream>

#include "json.hpp"

#include "mcx/badic.hpp"
#include "mcx/common.hpp"

// Field/mask container: 4-byte magic, u32 header length, JSON header, payload.
// Field payload is row-major little-endian doubles; mask payload packs one
// cell per bit, LSB first.

namespace mcx {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'M', 'C', 'X', 'F'};

void write_blob(const std::string& path, const json& header, const void* payload,
                size_t payload_bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ResourceError("cannot open for writing: " + path);
  std::string h = header.dump();
  uint32_t hlen = static_cast<uint32_t>(h.size());
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(h.data(), hlen);
  out.write(reinterpret_cast<const char*>(payload), payload_bytes);
  if (!out) throw ResourceError("short write: " + path);
}

json read_blob(const std::string& path, std::vector<char>& payload) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResourceError("cannot open: " + path);
  char magic[4];
  uint32_t hlen = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&hlen), 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ArgumentError("not a field/mask file: " + path);
  }
  std::string h(hlen, '\0');
  in.read(h.data(), hlen);
  json header = json::parse(h);
  payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return header;
}

json grid_header(const BAdicGrid& g, int m, const FieldSeedPath& seed,
                 const char* kind) {
  return json{{"kind", kind},
              {"d", g.d},
              {"b", g.b},
              {"level", g.level},
              {"m", m},
              {"seed_path", {seed.master_seed, seed.sample_id}}};
}

BAdicGrid grid_from_header(const json& h, int* m, FieldSeedPath* seed) {
  BAdicGrid g = make_grid(h.at("d").get<int>(), h.at("b").get<int>(),
                          h.at("level").get<int>());
  if (m) *m = h.at("m").get<int>();
  if (seed) {
    seed->master_seed = h.at("seed_path").at(0).get<uint64_t>();
    seed->sample_id = h.at("seed_path").at(1).get<uint64_t>();
  }
  return g;
}

}  // namespace

void write_field(const std::string& path, const DensityField& field,
                 const FieldSeedPath& seed) {
  write_blob(path, grid_header(field.grid, field.m, seed, "field"),
             field.values.data(), field.values.size() * sizeof(double));
}

DensityField read_field(const std::string& path, FieldSeedPath* seed) {
  std::vector<char> payload;
  json h = read_blob(path, payload);
  if (h.at("kind") != "field") throw ArgumentError("expected a field file: " + path);
  DensityField f;
  f.grid = grid_from_header(h, &f.m, seed);
  if (payload.size() != static_cast<size_t>(f.grid.n_cells) * sizeof(double)) {
    throw ArgumentError("field payload size does not match the header grid");
  }
  f.values.resize(static_cast<size_t>(f.grid.n_cells));
  std::memcpy(f.values.data(), payload.data(), payload.size());
  return f;
}

void write_mask(const std::string& path, const BAdicGrid& grid,
                const std::vector<uint8_t>& mask, const FieldSeedPath& seed) {
  if (mask.size() != static_cast<size_t>(grid.n_cells)) {
    throw ArgumentError("write_mask: mask size does not match grid");
  }
  std::vector<uint8_t> bits((mask.size() + 7) / 8, 0);
  for (size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) bits[i >> 3] |= uint8_t(1u << (i & 7));
  }
  write_blob(path, grid_header(grid, -1, seed, "mask"), bits.data(), bits.size());
}

std::vector<uint8_t> read_mask(const std::string& path, BAdicGrid* grid_out,
                               FieldSeedPath* seed) {
  std::vector<char> payload;
  json h = read_blob(path, payload);
  if (h.at("kind") != "mask") throw ArgumentError("expected a mask file: " + path);
  int m = 0;
  BAdicGrid g = grid_from_header(h, &m, seed);
  if (payload.size() != static_cast<size_t>((g.n_cells + 7) / 8)) {
    throw ArgumentError("mask payload size does not match the header grid");
  }
  std::vector<uint8_t> mask(static_cast<size_t>(g.n_cells), 0);
  for (size_t i = 0; i < mask.size(); ++i) {
    mask[i] = (payload[i >> 3] >> (i & 7)) & 1;
  }
  if (grid_out) *grid_out = g;
  return mask;
}

}  // namespace mcx
