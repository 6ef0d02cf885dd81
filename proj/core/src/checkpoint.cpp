#include "echoea/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "echoea/error.hpp"

namespace echoea {
namespace {

constexpr std::array<char, 8> kMagic = {'E', 'C', 'H', 'O', 'E', 'A', 'C', 'K'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff),
                                 static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  put_string(out, name);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m(r, c))));
    }
  }
}

class Reader {
 public:
  Reader(std::istream& in, std::string file) : in_(in), file_(std::move(file)) {}

  std::uint32_t u32() {
    std::array<unsigned char, 4> b{};
    read(reinterpret_cast<char*>(b.data()), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::string string() {
    std::string s(u32(), '\0');
    read(s.data(), s.size());
    return s;
  }

  void read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail("truncated checkpoint");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(file_, 0, what); }

 private:
  std::istream& in_;
  std::string file_;
};

nlohmann::json config_to_json(const EncoderConfig& c) {
  return {{"d_e", c.d_e},
          {"d_r", c.d_r},
          {"dropout_rate", c.dropout_rate},
          {"pan_gcn_layers", c.pan_gcn_layers},
          {"pan_gat_layers", c.pan_gat_layers},
          {"activation", to_string(c.activation)},
          {"leaky_slope", c.leaky_slope},
          {"use_pan", c.use_pan},
          {"use_en", c.use_en},
          {"use_can", c.use_can}};
}

EncoderConfig config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.d_e = j.at("d_e").get<int>();
  c.d_r = j.at("d_r").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.pan_gcn_layers = j.at("pan_gcn_layers").get<int>();
  c.pan_gat_layers = j.at("pan_gat_layers").get<int>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.use_pan = j.at("use_pan").get<bool>();
  c.use_en = j.at("use_en").get<bool>();
  c.use_can = j.at("use_can").get<bool>();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kCheckpointVersion);
  put_string(out, config_to_json(ck.config).dump());

  std::uint32_t count = static_cast<std::uint32_t>(ck.extras.size());
  ck.params.for_each([&](const std::string&, const Matrix&) { ++count; });
  put_u32(out, count);
  ck.params.for_each([&](const std::string& name, const Matrix& m) { put_matrix(out, name, m); });
  for (const auto& [name, m] : ck.extras) put_matrix(out, name, m);
  if (!out) throw LoadError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  Reader rd(in, path.filename().string());

  std::array<char, 8> magic{};
  rd.read(magic.data(), magic.size());
  if (magic != kMagic) rd.fail("not an echoea checkpoint");
  if (const auto v = rd.u32(); v != kCheckpointVersion) {
    rd.fail("unsupported checkpoint version " + std::to_string(v));
  }

  Checkpoint ck;
  try {
    ck.config = config_from_json(nlohmann::json::parse(rd.string()));
  } catch (const nlohmann::json::exception& e) {
    rd.fail(std::string("bad config block: ") + e.what());
  }
  ck.config.validate();

  std::map<std::string, Matrix> groups;
  const auto count = rd.u32();
  for (std::uint32_t g = 0; g < count; ++g) {
    auto name = rd.string();
    const auto rows = rd.u32();
    const auto cols = rd.u32();
    Matrix m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = std::bit_cast<float>(rd.u32());
    }
    groups.emplace(std::move(name), std::move(m));
  }

  ck.params = initialize_params(ck.config, 0);
  ck.params.for_each([&](const std::string& name, Matrix& m) {
    auto it = groups.find(name);
    if (it == groups.end()) throw ValidationError("checkpoint lacks parameter group " + name);
    if (it->second.rows() != m.rows() || it->second.cols() != m.cols()) {
      throw ValidationError("checkpoint group " + name + " has the wrong shape");
    }
    m = std::move(it->second);
    groups.erase(it);
  });
  ck.extras = std::move(groups);
  return ck;
}

}  // namespace echoea
