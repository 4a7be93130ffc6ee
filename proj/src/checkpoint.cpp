#include "gfcad/checkpoint.hpp"

#include <cstring>

#include "gfcad/sequence_io.hpp"

namespace gfcad {

namespace {

constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::uint8_t kDtypeF64 = 1;
constexpr std::uint8_t kDtypeU64 = 2;

void push_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}
void push_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}
std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t& off) {
    check(off + 4 <= b.size(), ErrorKind::Io, "checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + i]) << (8 * i);
    off += 4;
    return v;
}
std::uint64_t read_u64(const std::vector<std::uint8_t>& b, std::size_t& off) {
    check(off + 8 <= b.size(), ErrorKind::Io, "checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[off + i]) << (8 * i);
    off += 8;
    return v;
}

}  // namespace

std::vector<std::uint8_t> checkpoint_to_bytes(const Checkpoint& ckpt) {
    // data section first, offsets recorded as we go
    std::vector<std::uint8_t> data;
    struct Row {
        std::string name;
        std::uint8_t dtype;
        std::vector<int> shape;
        std::uint64_t offset;
        std::uint64_t nbytes;
    };
    std::vector<Row> rows;
    bool f32 = get_precision() == Precision::F32;
    for (const auto& [name, entry] : ckpt) {
        Row r;
        r.name = name;
        r.shape = entry.shape;
        r.offset = data.size();
        if (entry.is_raw) {
            r.dtype = kDtypeU64;
            for (std::uint64_t v : entry.raw) push_u64(data, v);
        } else if (f32) {
            r.dtype = kDtypeF32;
            for (double v : entry.values) {
                float f = static_cast<float>(v);
                std::uint32_t bits;
                std::memcpy(&bits, &f, 4);
                push_u32(data, bits);
            }
        } else {
            r.dtype = kDtypeF64;
            for (double v : entry.values) {
                std::uint64_t bits;
                std::memcpy(&bits, &v, 8);
                push_u64(data, bits);
            }
        }
        r.nbytes = data.size() - r.offset;
        rows.push_back(std::move(r));
    }

    std::vector<std::uint8_t> out{'G', 'F', 'T', '1'};
    push_u32(out, 1);  // version
    push_u32(out, static_cast<std::uint32_t>(rows.size()));
    for (const Row& r : rows) {
        push_u32(out, static_cast<std::uint32_t>(r.name.size()));
        out.insert(out.end(), r.name.begin(), r.name.end());
        out.push_back(r.dtype);
        out.push_back(static_cast<std::uint8_t>(r.shape.size()));
        for (int s : r.shape) push_u32(out, static_cast<std::uint32_t>(s));
        push_u64(out, r.offset);
        push_u64(out, r.nbytes);
    }
    out.insert(out.end(), data.begin(), data.end());
    return out;
}

Checkpoint checkpoint_from_bytes(const std::vector<std::uint8_t>& bytes) {
    check(bytes.size() >= 12 && bytes[0] == 'G' && bytes[1] == 'F' && bytes[2] == 'T' &&
              bytes[3] == '1',
          ErrorKind::Io, "bad checkpoint magic (want GFT1)");
    std::size_t off = 4;
    std::uint32_t version = read_u32(bytes, off);
    check(version == 1, ErrorKind::Io, "unsupported checkpoint version");
    std::uint32_t count = read_u32(bytes, off);

    struct Row {
        std::string name;
        std::uint8_t dtype;
        std::vector<int> shape;
        std::uint64_t offset;
        std::uint64_t nbytes;
    };
    std::vector<Row> rows;
    for (std::uint32_t i = 0; i < count; ++i) {
        Row r;
        std::uint32_t name_len = read_u32(bytes, off);
        check(off + name_len <= bytes.size(), ErrorKind::Io, "checkpoint truncated");
        r.name.assign(reinterpret_cast<const char*>(bytes.data() + off), name_len);
        off += name_len;
        check(off + 2 <= bytes.size(), ErrorKind::Io, "checkpoint truncated");
        r.dtype = bytes[off++];
        std::uint8_t ndim = bytes[off++];
        for (int d = 0; d < ndim; ++d) r.shape.push_back(static_cast<int>(read_u32(bytes, off)));
        r.offset = read_u64(bytes, off);
        r.nbytes = read_u64(bytes, off);
        rows.push_back(std::move(r));
    }
    std::size_t data_start = off;

    Checkpoint ckpt;
    for (const Row& r : rows) {
        std::size_t pos = data_start + r.offset;
        check(pos + r.nbytes <= bytes.size(), ErrorKind::Io,
              "checkpoint entry out of range: " + r.name);
        CheckpointEntry entry;
        entry.shape = r.shape;
        if (r.dtype == kDtypeU64) {
            entry.is_raw = true;
            check(r.nbytes % 8 == 0, ErrorKind::Io, "bad u64 payload: " + r.name);
            for (std::size_t p = pos; p < pos + r.nbytes; p += 8) {
                std::size_t q = p;
                entry.raw.push_back(read_u64(bytes, q));
            }
        } else if (r.dtype == kDtypeF32) {
            check(r.nbytes % 4 == 0, ErrorKind::Io, "bad f32 payload: " + r.name);
            for (std::size_t p = pos; p < pos + r.nbytes; p += 4) {
                std::size_t q = p;
                std::uint32_t bits = read_u32(bytes, q);
                float f;
                std::memcpy(&f, &bits, 4);
                entry.values.push_back(static_cast<double>(f));
            }
        } else if (r.dtype == kDtypeF64) {
            check(r.nbytes % 8 == 0, ErrorKind::Io, "bad f64 payload: " + r.name);
            for (std::size_t p = pos; p < pos + r.nbytes; p += 8) {
                std::size_t q = p;
                std::uint64_t bits = read_u64(bytes, q);
                double v;
                std::memcpy(&v, &bits, 8);
                entry.values.push_back(v);
            }
        } else {
            throw Error(ErrorKind::Io, "unknown dtype in checkpoint entry: " + r.name);
        }
        ckpt.emplace(r.name, std::move(entry));
    }
    return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    write_binary_file(path, checkpoint_to_bytes(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
    return checkpoint_from_bytes(read_binary_file(path));
}

}  // namespace gfcad
