#include "tensor/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_map>

#include "common/error.hpp"

namespace cajscc::nn {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'C', 'A', 'J', 'S'};

class Writer {
public:
    template <typename T>
    void put(T v) {
        char bytes[sizeof(T)];
        std::memcpy(bytes, &v, sizeof(T));
        buf_.append(bytes, sizeof(T));
    }
    void put_bytes(const std::string& s) { buf_.append(s); }
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(std::string data) : data_(std::move(data)) {}
    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string get_bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == data_.size(); }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) {
            throw FormatError("checkpoint truncated at byte offset " + std::to_string(pos_));
        }
    }
    std::string data_;
    std::size_t pos_ = 0;
};

void put_record(Writer& w, const CheckpointRecord& r) {
    if (r.name.size() > 0xffff) throw FormatError("checkpoint record name too long: " + r.name);
    if (r.dims.size() > 0xff) throw FormatError("checkpoint record rank too large: " + r.name);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(r.name.size()));
    w.put_bytes(r.name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(r.dims.size()));
    std::size_t n = 1;
    for (auto d : r.dims) {
        w.put<std::uint32_t>(d);
        n *= d;
    }
    if (n != r.values.size()) throw FormatError("checkpoint record '" + r.name + "' dims do not match its values");
    for (float v : r.values) w.put<float>(v);
}

CheckpointRecord get_record(Reader& r) {
    CheckpointRecord rec;
    const auto len = r.get<std::uint16_t>();
    rec.name = r.get_bytes(len);
    const auto rank = r.get<std::uint8_t>();
    std::size_t n = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
        rec.dims.push_back(r.get<std::uint32_t>());
        n *= rec.dims.back();
    }
    rec.values.resize(n);
    for (auto& v : rec.values) v = r.get<float>();
    return rec;
}

CheckpointRecord to_record(const std::string& name, const Tensor& t) {
    CheckpointRecord r;
    r.name = name;
    for (auto d : t.shape()) r.dims.push_back(static_cast<std::uint32_t>(d));
    r.values.reserve(t.numel());
    for (double v : t.data()) r.values.push_back(static_cast<float>(v));
    return r;
}

CheckpointRecord to_record(const std::string& name, const std::vector<std::uint32_t>& dims,
                           const std::vector<double>& values) {
    CheckpointRecord r{name, dims, {}};
    for (double v : values) r.values.push_back(static_cast<float>(v));
    return r;
}

std::string arch_record_name(std::uint64_t hash) {
    std::ostringstream os;
    os << "@arch:" << std::hex;
    os.width(16);
    os.fill('0');
    os << hash;
    return os.str();
}

void copy_into(const CheckpointRecord& rec, Tensor t) {
    std::vector<std::uint32_t> dims;
    for (auto d : t.shape()) dims.push_back(static_cast<std::uint32_t>(d));
    if (dims != rec.dims) throw FormatError("checkpoint record '" + rec.name + "' has a different shape");
    auto data = t.data();
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = rec.values[i];
}

}  // namespace

void write_checkpoint_file(const std::string& path, const CheckpointFile& file) {
    Writer w;
    w.put_bytes(std::string(kMagic, 4));
    w.put<std::uint32_t>(kCheckpointVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(file.parameters.size()));
    for (const auto& r : file.parameters) put_record(w, r);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(file.adam.size()));
    for (const auto& r : file.adam) put_record(w, r);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw IoError("failed writing '" + path + "'");
}

CheckpointFile read_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    Reader r(std::string(std::istreambuf_iterator<char>(in), {}));
    if (r.get_bytes(4) != std::string(kMagic, 4)) throw FormatError("'" + path + "' is not a CAJS checkpoint");
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    CheckpointFile file;
    const auto n_params = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_params; ++i) file.parameters.push_back(get_record(r));
    const auto n_adam = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_adam; ++i) file.adam.push_back(get_record(r));
    if (!r.at_end()) throw FormatError("trailing bytes after checkpoint at offset " + std::to_string(r.pos()));
    return file;
}

void save_checkpoint(const std::string& path, const ParameterSet& params, std::uint64_t arch_hash) {
    CheckpointFile file;
    file.parameters.push_back({arch_record_name(arch_hash), {0}, {}});
    for (const auto& e : params.entries()) file.parameters.push_back(to_record(e.name, e.value));
    for (const auto& b : params.buffers()) file.parameters.push_back(to_record(b.name, b.value));

    file.adam.push_back({"@step", {1}, {static_cast<float>(params.step())}});
    for (const auto& e : params.entries()) {
        std::vector<std::uint32_t> dims;
        for (auto d : e.value.shape()) dims.push_back(static_cast<std::uint32_t>(d));
        file.adam.push_back(to_record(e.name + "#m", dims, e.first_moment));
        file.adam.push_back(to_record(e.name + "#v", dims, e.second_moment));
    }
    write_checkpoint_file(path, file);
}

void load_checkpoint(const std::string& path, ParameterSet& params, std::uint64_t arch_hash) {
    const CheckpointFile file = read_checkpoint_file(path);
    if (file.parameters.empty() || file.parameters.front().name.rfind("@arch:", 0) != 0) {
        throw FormatError("checkpoint '" + path + "' has no architecture record");
    }
    if (file.parameters.front().name != arch_record_name(arch_hash)) {
        throw ConfigError("checkpoint '" + path + "' was written for a different architecture (" +
                          file.parameters.front().name + ", expected " + arch_record_name(arch_hash) + ")");
    }
    std::unordered_map<std::string, const CheckpointRecord*> by_name;
    for (const auto& r : file.parameters) by_name[r.name] = &r;
    for (const auto& r : file.adam) by_name[r.name] = &r;

    auto lookup = [&](const std::string& name) -> const CheckpointRecord& {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw FormatError("checkpoint '" + path + "' lacks record '" + name + "'");
        return *it->second;
    };

    for (auto& e : params.entries()) {
        copy_into(lookup(e.name), e.value);
        const auto& m = lookup(e.name + "#m");
        const auto& v = lookup(e.name + "#v");
        if (m.values.size() != e.first_moment.size() || v.values.size() != e.second_moment.size()) {
            throw FormatError("checkpoint Adam state for '" + e.name + "' has a different size");
        }
        std::copy(m.values.begin(), m.values.end(), e.first_moment.begin());
        std::copy(v.values.begin(), v.values.end(), e.second_moment.begin());
    }
    for (auto& b : params.buffers()) copy_into(lookup(b.name), b.value);
    const auto& step = lookup("@step");
    if (step.values.size() != 1) throw FormatError("checkpoint step record malformed");
    params.set_step(static_cast<std::uint64_t>(step.values[0]));
}

}  // namespace cajscc::nn
