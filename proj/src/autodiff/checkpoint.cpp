#include "pointedge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pointedge/errors.hpp"

namespace pointedge {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    std::uint64_t bits = 0;
    if constexpr (std::is_same_v<T, double>) {
        bits = std::bit_cast<std::uint64_t>(value);
    } else {
        bits = static_cast<std::uint64_t>(value);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        if constexpr (std::is_same_v<T, double>) {
            return std::bit_cast<double>(bits);
        } else {
            return static_cast<T>(bits);
        }
    }

    std::string string(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParamStore& params) {
    std::vector<std::uint8_t> out(std::begin(checkpoint_magic), std::end(checkpoint_magic));
    put_le<std::uint32_t>(out, checkpoint_version);
    put_le<std::uint64_t>(out, params.count());
    for (const auto& [name, t] : params) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) put_le<std::uint64_t>(out, d);
        for (double v : t.values()) put_le<double>(out, v);
    }
    return out;
}

ParamStore decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader in(bytes);
    if (in.string(sizeof(checkpoint_magic)) != std::string(checkpoint_magic, sizeof(checkpoint_magic))) {
        throw ParseError("not a checkpoint file (bad magic)");
    }
    const auto version = in.get<std::uint32_t>();
    if (version != checkpoint_version) throw ParseError("unsupported checkpoint version " + std::to_string(version));
    const auto count = in.get<std::uint64_t>();
    ParamStore params;
    for (std::uint64_t p = 0; p < count; ++p) {
        const auto name = in.string(in.get<std::uint32_t>());
        const auto rank = in.get<std::uint32_t>();
        Shape shape(rank);
        for (auto& d : shape) d = in.get<std::uint64_t>();
        Tensor t(shape);
        for (double& v : t.values()) v = in.get<double>();
        params.set(name, std::move(t));
    }
    if (!in.done()) throw ParseError("trailing bytes after checkpoint payload");
    return params;
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params) {
    const auto bytes = encode_checkpoint(params);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write checkpoint " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("short write to checkpoint " + path.string());
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

void require_compatible(const ParamStore& expected, const ParamStore& loaded) {
    std::string problems;
    for (const auto& [name, t] : expected) {
        if (!loaded.contains(name)) {
            problems += "\n  missing " + name + " " + t.shape_string();
        } else if (!loaded.get(name).same_shape(t)) {
            problems += "\n  " + name + ": expected " + t.shape_string() + ", checkpoint has " +
                        loaded.get(name).shape_string();
        }
    }
    for (const auto& [name, t] : loaded) {
        if (!expected.contains(name)) problems += "\n  unexpected " + name + " " + t.shape_string();
    }
    if (!problems.empty()) throw ValidationError("checkpoint incompatible with config:" + problems);
}

}  // namespace pointedge
