#include "obcov/stream_codec.hpp"

#include "obcov/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

namespace obcov {

namespace {

constexpr std::uint8_t kMagic[4] = {'O', 'B', 'C', 'V'};

class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

    template <typename T>
    void uint(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
    void raw(std::span<const std::uint8_t> b) {
        for (std::uint8_t v : b) out_.push_back(v);
    }

private:
    std::vector<std::uint8_t>& out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    template <typename T>
    T uint(const char* what) {
        need(sizeof(T), what);
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(in_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return v;
    }
    double f64(const char* what) { return std::bit_cast<double>(uint<std::uint64_t>(what)); }
    std::vector<std::uint8_t> raw(std::size_t count, const char* what) {
        need(count, what);
        std::vector<std::uint8_t> b(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                    in_.begin() + static_cast<std::ptrdiff_t>(pos_ + count));
        pos_ += count;
        return b;
    }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }

private:
    void need(std::size_t count, const char* what) const {
        if (in_.size() - pos_ < count)
            throw Error(Errc::TruncatedStream, std::string("stream ends inside ") + what);
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> encode_stream(const SampleStream& stream) {
    stream.validate();
    if (stream.p > std::numeric_limits<std::uint32_t>::max() || stream.n() > std::numeric_limits<std::uint32_t>::max())
        throw Error(Errc::InvalidArgument, "p and n must fit in 32 bits");

    const bool vector_scale = is_entrywise(stream.policy);
    const std::size_t record = 2 * SignVector::byte_count(stream.p) + 8 * (vector_scale ? stream.p : 1);
    std::vector<std::uint8_t> out;
    out.reserve(kStreamHeaderBytes + record * stream.n());

    Writer w(out);
    w.raw(kMagic);
    w.uint<std::uint16_t>(kStreamFormatVersion);
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(stream.policy));
    w.uint<std::uint8_t>(vector_scale ? 1 : 0);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(stream.p));
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(stream.n()));
    w.f64(stream.header_param);

    for (const auto& s : stream.samples) {
        w.raw(s.y.bytes());
        w.raw(s.y_bar.bytes());
        if (vector_scale) {
            for (double v : std::get<std::vector<double>>(s.scale)) w.f64(v);
        } else {
            w.f64(std::get<double>(s.scale));
        }
    }
    return out;
}

SampleStream decode_stream(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto magic = r.raw(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0) throw Error(Errc::BadMagic, "not an .obcv stream");
    const auto version = r.uint<std::uint16_t>("version");
    if (version != kStreamFormatVersion)
        throw Error(Errc::UnsupportedVersion, "format version " + std::to_string(version));

    const auto tag = r.uint<std::uint8_t>("policy tag");
    if (tag > static_cast<std::uint8_t>(DitherPolicy::MaxEntrywise))
        throw Error(Errc::InvalidArgument, "unknown policy tag " + std::to_string(tag));
    SampleStream stream;
    stream.policy = static_cast<DitherPolicy>(tag);

    const auto scale_kind = r.uint<std::uint8_t>("scale kind");
    const bool vector_scale = is_entrywise(stream.policy);
    if (scale_kind != (vector_scale ? 1 : 0))
        throw Error(Errc::InvalidArgument, "scale kind " + std::to_string(scale_kind) + " does not match policy " +
                                               std::string(policy_name(stream.policy)));

    stream.p = r.uint<std::uint32_t>("p");
    const auto n = r.uint<std::uint32_t>("n");
    stream.header_param = r.f64("header parameter");

    const std::size_t sign_bytes = SignVector::byte_count(stream.p);
    const std::size_t record = 2 * sign_bytes + 8 * (vector_scale ? stream.p : 1);
    if (r.remaining() / record < n) throw Error(Errc::TruncatedStream, "fewer than n sample records");

    stream.samples.reserve(n);
    for (std::uint32_t k = 0; k < n; ++k) {
        QuantizedSample s;
        s.y = SignVector(stream.p, r.raw(sign_bytes, "y"));
        s.y_bar = SignVector(stream.p, r.raw(sign_bytes, "y_bar"));
        if (vector_scale) {
            std::vector<double> v(stream.p);
            for (double& x : v) x = r.f64("scale");
            s.scale = std::move(v);
        } else {
            s.scale = r.f64("scale");
        }
        stream.samples.push_back(std::move(s));
    }
    if (r.remaining() != 0)
        throw Error(Errc::InvalidArgument, std::to_string(r.remaining()) + " trailing bytes after last sample");
    stream.validate();
    return stream;
}

void write_stream_file(const std::filesystem::path& path, const SampleStream& stream) {
    const auto bytes = encode_stream(stream);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

SampleStream read_stream_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_stream(bytes);
}

} // namespace obcov
