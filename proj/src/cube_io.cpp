#include "fdw/cube/io.hpp"

#include <fstream>
#include <json.hpp>

#include "fdw/common/crc64.hpp"

namespace fdw::cube {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kFormatVersion = 1;

template <typename T>
void write_payload(const fs::path& path, const std::vector<T>& data, json& crcs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CubeIoError("cannot write payload: " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            (std::streamsize)(data.size() * sizeof(T)));
  out.close();
  crcs[path.filename().string()] =
      Crc64::to_hex(Crc64::of(data.data(), data.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_payload(const fs::path& path, std::size_t count, const json& crcs) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw CubeIoError("missing payload: " + path.string());
  const auto bytes = (std::size_t)in.tellg();
  if (bytes < count * sizeof(T))
    throw TruncatedPayloadError("payload " + path.filename().string() + " holds " +
                                std::to_string(bytes) + " bytes, header expects " +
                                std::to_string(count * sizeof(T)));
  if (bytes != count * sizeof(T))
    throw CubeIoError("payload " + path.filename().string() + " larger than header expects");
  std::vector<T> data(count);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data.data()), (std::streamsize)(count * sizeof(T)));
  const auto it = crcs.find(path.filename().string());
  if (it == crcs.end())
    throw CubeIoError("header missing checksum for " + path.filename().string());
  const std::uint64_t want = Crc64::from_hex(it->get<std::string>());
  const std::uint64_t got = Crc64::of(data.data(), data.size() * sizeof(T));
  if (want != got)
    throw ChecksumError("checksum mismatch in " + path.filename().string());
  return data;
}

}  // namespace

void save_cube(const DataCube& cube, const fs::path& dir) {
  cube.header.validate();
  fs::create_directories(dir);
  json crcs = json::object();
  for (std::size_t c = 0; c < cube.channels.size(); ++c)
    write_payload(dir / ("chan_" + cube.header.channels[c] + ".f32"), cube.channels[c], crcs);
  write_payload(dir / "clc.u16", cube.clc, crcs);
  write_payload(dir / "susceptible.u8", cube.susceptible, crcs);
  write_payload(dir / "burn.u8", cube.burn, crcs);

  json h;
  h["format_version"] = kFormatVersion;
  h["height"] = cube.header.height;
  h["width"] = cube.header.width;
  h["days"] = cube.header.days;
  h["days_per_year"] = cube.header.days_per_year;
  h["start_date"] = cube.header.start_date;
  h["channels"] = cube.header.channels;
  h["clc_classes"] = cube.header.clc_classes;
  if (cube.header.generator_seed) h["generator_seed"] = *cube.header.generator_seed;
  h["payload_crc64"] = crcs;
  std::ofstream out(dir / "header.json", std::ios::trunc);
  out << h.dump(2) << "\n";
}

DataCube load_cube(const fs::path& dir) {
  std::ifstream in(dir / "header.json");
  if (!in) throw CubeIoError("missing header.json in " + dir.string());
  json h = json::parse(in);
  if (h.value("format_version", -1) != kFormatVersion)
    throw VersionMismatchError("unsupported cube format version in " + dir.string());

  DataCube cube;
  cube.header.height = h.at("height").get<std::size_t>();
  cube.header.width = h.at("width").get<std::size_t>();
  cube.header.days = h.at("days").get<std::size_t>();
  cube.header.days_per_year = h.at("days_per_year").get<std::size_t>();
  cube.header.start_date = h.at("start_date").get<std::string>();
  cube.header.channels = h.at("channels").get<std::vector<std::string>>();
  cube.header.clc_classes = h.at("clc_classes").get<std::size_t>();
  if (h.contains("generator_seed"))
    cube.header.generator_seed = h.at("generator_seed").get<std::uint64_t>();
  cube.header.validate();

  const json& crcs = h.at("payload_crc64");
  const std::size_t P = cube.plane(), T = cube.header.days;
  cube.channels.reserve(kNumChannels);
  for (const auto& name : cube.header.channels)
    cube.channels.push_back(read_payload<float>(dir / ("chan_" + name + ".f32"), T * P, crcs));
  cube.clc = read_payload<std::uint16_t>(dir / "clc.u16", P, crcs);
  cube.susceptible = read_payload<std::uint8_t>(dir / "susceptible.u8", P, crcs);
  cube.burn = read_payload<std::uint8_t>(dir / "burn.u8", T * P, crcs);
  cube.validate();
  return cube;
}

}  // namespace fdw::cube
