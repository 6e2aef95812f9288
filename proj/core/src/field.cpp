#include "dpre/field.hpp"

#include <cstring>
#include <fstream>

#include "dpre/errors.hpp"

namespace dpre {

std::uint64_t site_key(int d, const int* x) {
    const int bits = d <= 3 ? 21 : 16;
    if (d > 4) throw ValidationError("field sampling supports d <= 4");
    const std::int64_t half = std::int64_t{1} << (bits - 1);
    std::uint64_t key = 0;
    for (int i = 0; i < d; ++i) {
        const std::int64_t v = static_cast<std::int64_t>(x[i]) + half;
        if (v < 0 || v >= 2 * half)
            throw ValidationError("site coordinate out of range for counter-based sampling");
        key = (key << bits) | static_cast<std::uint64_t>(v);
    }
    return key;
}

CounterField::CounterField(const EnvLaw& law, int d, std::uint64_t seed, std::uint32_t stream,
                           Purpose purpose)
    : law_(law), d_(d), key_(derive_key(seed, purpose)), stream_(stream) {
    if (d < 1 || d > 4) throw ValidationError("field sampling supports 1 <= d <= 4");
}

double CounterField::operator()(int k, const int* x) const {
    return law_.sample(uniforms_at(key_, static_cast<std::uint32_t>(k), stream_, site_key(d_, x)));
}

FieldFn CounterField::fn() const {
    return [self = *this](int k, const int* x) { return self(k, x); };
}

LatticeField::LatticeField(int n, const Box& box, std::vector<double> values, std::uint64_t seed,
                           std::uint32_t stream)
    : n_(n), box_(box), values_(std::move(values)), seed_(seed), stream_(stream) {
    if (values_.size() != static_cast<std::size_t>(n) * box.size())
        throw ValidationError("field value count does not match n * |box|");
}

FieldFn LatticeField::fn() const {
    return [this](int k, const int* x) { return at(k, x); };
}

LatticeField sample_field(const EnvLaw& law, int n, const Box& box, std::uint64_t seed,
                          std::uint32_t stream) {
    if (n < 1) throw ValidationError("field horizon must be >= 1");
    if (box.empty()) throw ValidationError("field box is empty");
    const CounterField src(law, box.dim(), seed, stream);
    std::vector<double> values(static_cast<std::size_t>(n) * box.size());
    for (int k = 1; k <= n; ++k) {
        double* row = values.data() + static_cast<std::size_t>(k - 1) * box.size();
        for (BoxCursor c(box); c.valid(); c.next()) row[c.index()] = src(k, c.coords());
    }
    return LatticeField(n, box, std::move(values), seed, stream);
}

namespace {

constexpr char kMagic[8] = {'D', 'P', 'R', 'E', 'F', 'L', 'D', '1'};

void put_u64(std::ofstream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::ifstream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw ValidationError("truncated field file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void LatticeField::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open " + path + " for writing");
    os.write(kMagic, 8);
    put_u64(os, static_cast<std::uint64_t>(n_));
    put_u64(os, static_cast<std::uint64_t>(box_.dim()));
    for (int i = 0; i < box_.dim(); ++i) {
        put_u64(os, static_cast<std::uint64_t>(static_cast<std::int64_t>(box_.lo()[i])));
        put_u64(os, static_cast<std::uint64_t>(static_cast<std::int64_t>(box_.hi()[i])));
    }
    put_u64(os, seed_);
    put_u64(os, stream_);
    for (double v : values_) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64(os, bits);
    }
}

LatticeField LatticeField::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw ValidationError(path + " is not a field dump");
    const auto n = static_cast<int>(get_u64(is));
    const auto d = static_cast<int>(get_u64(is));
    if (d < 1 || d > kMaxDim || n < 1) throw ValidationError("corrupt field header");
    Point lo{}, hi{};
    for (int i = 0; i < d; ++i) {
        lo[i] = static_cast<int>(static_cast<std::int64_t>(get_u64(is)));
        hi[i] = static_cast<int>(static_cast<std::int64_t>(get_u64(is)));
    }
    const Box box(d, lo, hi);
    const std::uint64_t seed = get_u64(is);
    const auto stream = static_cast<std::uint32_t>(get_u64(is));
    std::vector<double> values(static_cast<std::size_t>(n) * box.size());
    for (double& v : values) {
        const std::uint64_t bits = get_u64(is);
        std::memcpy(&v, &bits, 8);
    }
    return LatticeField(n, box, std::move(values), seed, stream);
}

}  // namespace dpre
