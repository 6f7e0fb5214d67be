#include "faae/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <fstream>
#include <iterator>

#include "faae/error.hpp"

namespace faae {

Network<float>& Checkpoint::network(std::string_view name) {
    for (auto& n : networks)
        if (n.name() == name) return n;
    throw IoError("checkpoint has no network named '" + std::string(name) + "'");
}

const Network<float>& Checkpoint::network(std::string_view name) const {
    for (const auto& n : networks)
        if (n.name() == name) return n;
    throw IoError("checkpoint has no network named '" + std::string(name) + "'");
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
        crc = ::crc32(crc, bytes.data() + offset, chunk);
        offset += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void count(std::size_t n) {
        if (n > 0xFFFFFFFFu) throw IoError("checkpoint: field too large to encode");
        u32(static_cast<std::uint32_t>(n));
    }
    void str(std::string_view s) {
        count(s.size());
        out_.insert(out_.end(), s.begin(), s.end());
    }
    void tensor(const Tensor<float>& t) {
        count(t.rank());
        for (std::size_t d : t.shape()) count(d);
        for (float v : t.data()) f32(v);
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void le(std::uint64_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

    std::uint16_t u16(const char* field) { return static_cast<std::uint16_t>(le(2, field)); }
    std::uint32_t u32(const char* field) { return static_cast<std::uint32_t>(le(4, field)); }
    std::uint64_t u64(const char* field) { return le(8, field); }
    float f32(const char* field) { return std::bit_cast<float>(u32(field)); }
    double f64(const char* field) { return std::bit_cast<double>(u64(field)); }
    std::string str(const char* field) {
        const std::size_t n = u32(field);
        need(n, field);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::string raw(std::size_t n, const char* field) {
        need(n, field);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    Shape shape(const char* field) {
        const std::size_t rank = u32(field);
        need(4 * rank, field);
        Shape s(rank);
        for (auto& d : s) d = u32(field);
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }
    [[noreturn]] void fail(const std::string& what) const { throw IoError(source_ + ": " + what); }

private:
    void need(std::size_t n, const char* field) const {
        if (bytes_.size() - pos_ < n) fail(std::string("truncated while reading ") + field);
    }
    std::uint64_t le(int n, const char* field) {
        need(static_cast<std::size_t>(n), field);
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> bytes_;
    std::string source_;
    std::size_t pos_ = 0;
};

void write_named(Writer& w, const std::vector<NamedTensor<float>>& tensors) {
    w.count(tensors.size());
    for (const auto& t : tensors) {
        w.str(t.name);
        w.tensor(t.tensor);
    }
}

void read_named(Reader& r, const std::vector<NamedTensor<float>>& expected, const std::string& network) {
    const std::size_t n = r.u32("tensor count");
    if (n != expected.size()) {
        r.fail("network " + network + " stores " + std::to_string(n) + " tensors, its architecture has " +
               std::to_string(expected.size()));
    }
    for (const auto& slot : expected) {
        const std::string name = r.str("tensor name");
        if (name != slot.name) r.fail("network " + network + ": expected tensor " + slot.name + ", found " + name);
        const Shape shape = r.shape("tensor shape");
        if (shape != slot.tensor.shape()) {
            r.fail("network " + network + ": tensor " + name + " has shape " + shape_string(shape) + ", expected " +
                   shape_string(slot.tensor.shape()));
        }
        Tensor<float> dst = slot.tensor;
        for (float& v : dst.data()) v = r.f32("tensor values");
    }
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
    Writer w;
    for (char ch : std::string_view("FAAE")) w.u8(static_cast<std::uint8_t>(ch));
    w.u16(c.version);
    w.str(c.config_text);
    w.count(c.networks.size());
    for (const auto& net : c.networks) {
        w.str(net.name());
        w.str(net.architecture());
        write_named(w, net.parameters());
        write_named(w, net.buffers());
    }
    w.count(c.optimizers.size());
    for (const auto& opt : c.optimizers) {
        w.str(opt.name);
        w.u64(opt.state.t);
        w.f64(opt.state.beta1);
        w.f64(opt.state.beta2);
        w.f64(opt.state.epsilon);
        if (opt.state.m.size() != opt.state.v.size()) throw ContractError("checkpoint: moment slots disagree");
        w.count(opt.state.m.size());
        for (std::size_t k = 0; k < opt.state.m.size(); ++k) {
            if (opt.state.m[k].size() != opt.state.v[k].size()) throw ContractError("checkpoint: moment sizes disagree");
            w.count(opt.state.m[k].size());
            for (double v : opt.state.m[k]) w.f64(v);
            for (double v : opt.state.v[k]) w.f64(v);
        }
    }
    for (std::uint64_t word : c.rng) w.u64(word);
    auto bytes = w.take();
    const std::uint32_t crc = crc32(bytes);
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
    return bytes;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& source) {
    if (bytes.size() < 4 + 2 + 4) throw IoError(source + ": checksum: file too short (" + std::to_string(bytes.size()) + " bytes)");
    const auto body = bytes.first(bytes.size() - 4);
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body.size() + i]) << (8 * i);
    if (crc32(body) != stored) throw IoError(source + ": checksum mismatch (file is corrupt or truncated)");

    Reader r(body, source);
    if (r.raw(4, "magic") != "FAAE") r.fail("magic: not a checkpoint file");
    Checkpoint c;
    c.version = r.u16("version");
    if (c.version > kCheckpointVersion) {
        r.fail("version: file version " + std::to_string(c.version) + " is newer than the supported version " +
               std::to_string(kCheckpointVersion));
    }
    c.config_text = r.str("config");
    const std::size_t networks = r.u32("network count");
    for (std::size_t i = 0; i < networks; ++i) {
        std::string name = r.str("network name");
        const std::string arch = r.str("architecture");
        Rng unused(0);
        Network<float> net = [&] {
            try {
                return Network<float>::from_architecture(name, arch, unused);
            } catch (const IoError&) {
                throw;
            } catch (const Error& e) {
                r.fail("architecture of network " + name + ": " + e.what());
            }
        }();
        read_named(r, net.parameters(), name);
        read_named(r, net.buffers(), name);
        c.networks.push_back(std::move(net));
    }
    const std::size_t optimizers = r.u32("optimizer count");
    for (std::size_t i = 0; i < optimizers; ++i) {
        OptimizerRecord rec;
        rec.name = r.str("optimizer name");
        rec.state.t = r.u64("optimizer step");
        rec.state.beta1 = r.f64("beta1");
        rec.state.beta2 = r.f64("beta2");
        rec.state.epsilon = r.f64("epsilon");
        const std::size_t slots = r.u32("moment slot count");
        for (std::size_t k = 0; k < slots; ++k) {
            const std::size_t n = r.u32("moment length");
            std::vector<double> m(n), v(n);
            for (auto& x : m) x = r.f64("first moment");
            for (auto& x : v) x = r.f64("second moment");
            rec.state.m.push_back(std::move(m));
            rec.state.v.push_back(std::move(v));
        }
        c.optimizers.push_back(std::move(rec));
    }
    for (auto& word : c.rng) word = r.u64("rng state");
    if (!r.done()) r.fail("trailing bytes after rng state");
    return c;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    write_file_bytes(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_checkpoint(bytes, path.string());
}

}  // namespace faae
