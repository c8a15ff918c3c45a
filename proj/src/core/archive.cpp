// Copyright 2026 the congeo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/archive.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace congeo {

namespace {

constexpr char kMagic[8] = {'C', 'O', 'N', 'G', 'E', 'O', 'A', 'R'};

void put_u64(std::ostream& out, uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

uint64_t get_u64(std::istream& in) {
    char buf[8];
    in.read(buf, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return v;
}

}  // namespace

const Eigen::MatrixXf* Archive::find(const std::string& name) const {
    for (const auto& [n, m] : arrays)
        if (n == name) return &m;
    return nullptr;
}

void Archive::save(const std::string& path) const {
    nlohmann::ordered_json header;
    header["version"] = kVersion;
    header["meta"] = meta;
    auto& table = header["arrays"] = nlohmann::ordered_json::array();
    for (const auto& [name, m] : arrays) {
        table.push_back({{"name", name},
                         {"rows", static_cast<int64_t>(m.rows())},
                         {"cols", static_cast<int64_t>(m.cols())}});
    }
    std::string json_bytes = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("archive: cannot open for write: " + path);
    out.write(kMagic, 8);
    put_u64(out, json_bytes.size());
    out.write(json_bytes.data(), static_cast<std::streamsize>(json_bytes.size()));
    for (const auto& [name, m] : arrays) {
        // Column-major storage order, matching Eigen's default.
        out.write(reinterpret_cast<const char*>(m.data()),
                  static_cast<std::streamsize>(sizeof(float) * m.size()));
    }
    if (!out) throw std::runtime_error("archive: write failed: " + path);
}

Archive Archive::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("archive: cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("archive: bad magic in " + path);
    uint64_t json_size = get_u64(in);
    std::string json_bytes(json_size, '\0');
    in.read(json_bytes.data(), static_cast<std::streamsize>(json_size));
    if (!in) throw std::runtime_error("archive: truncated header in " + path);

    nlohmann::ordered_json header = nlohmann::ordered_json::parse(json_bytes);
    if (!header.contains("version"))
        throw std::runtime_error("archive: missing version field in " + path);
    if (header["version"].get<uint32_t>() != kVersion)
        throw std::runtime_error("archive: unsupported version in " + path);

    Archive ar;
    ar.meta = header.value("meta", nlohmann::ordered_json::object());
    for (const auto& entry : header["arrays"]) {
        auto rows = entry["rows"].get<int64_t>();
        auto cols = entry["cols"].get<int64_t>();
        Eigen::MatrixXf m(rows, cols);
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(sizeof(float) * m.size()));
        if (!in) throw std::runtime_error("archive: truncated array data in " + path);
        ar.arrays.emplace_back(entry["name"].get<std::string>(), std::move(m));
    }
    return ar;
}

}  // namespace congeo
