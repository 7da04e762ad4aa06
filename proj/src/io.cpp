#include "surmo/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "surmo/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts unsupported");

namespace surmo::io {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FileNotFoundError("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FileNotFoundError("cannot open: " + path);
    return f;
}

template <class T>
void write_raw(std::ostream& s, const T* data, size_t count) {
    s.write(reinterpret_cast<const char*>(data), std::streamsize(count * sizeof(T)));
}

template <class T>
void read_raw(std::istream& s, T* data, size_t count, const std::string& what) {
    s.read(reinterpret_cast<char*>(data), std::streamsize(count * sizeof(T)));
    if (size_t(s.gcount()) != count * sizeof(T))
        throw FormatError("truncated payload while reading " + what);
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

// --- mesh sequences -----------------------------------------------------------

void write_mesh_sequence(const std::string& path, const MeshSequence& seq) {
    std::ofstream f = open_out(path);
    f << "SMSQ1 1\n";
    f << seq.vertex_count() << " " << seq.faces.size() << " " << seq.frame_count() << " "
      << fmt_double(seq.fps) << " " << seq.uv_res_hint << "\n";
    for (const auto& face : seq.faces) write_raw(f, face.data(), 3);
    for (const auto& uv : seq.uv_coords) {
        float xy[2] = {float(uv.x), float(uv.y)};
        write_raw(f, xy, 2);
    }
    for (const auto& frame : seq.frames) {
        for (const auto& v : frame) {
            float xyz[3] = {float(v.x), float(v.y), float(v.z)};
            write_raw(f, xyz, 3);
        }
    }
}

MeshSequence read_mesh_sequence(const std::string& path) {
    std::ifstream f = open_in(path);
    std::string magic;
    int version = 0;
    f >> magic >> version;
    if (magic != "SMSQ1") throw FormatError("bad magic in mesh sequence: " + path);
    if (version != 1) throw FormatError("unsupported mesh sequence version " +
                                        std::to_string(version));
    size_t nv = 0, nf = 0, nt = 0;
    double fps = 0;
    int uvres = 0;
    f >> nv >> nf >> nt >> fps >> uvres;
    if (!f) throw FormatError("malformed mesh sequence header: " + path);
    f.get();  // newline before binary body

    MeshSequence seq;
    seq.fps = fps;
    seq.uv_res_hint = uvres;
    seq.faces.resize(nf);
    for (auto& face : seq.faces) read_raw(f, face.data(), 3, "faces");
    seq.uv_coords.resize(nv);
    for (auto& uv : seq.uv_coords) {
        float xy[2];
        read_raw(f, xy, 2, "uv coords");
        uv = {double(xy[0]), double(xy[1])};
    }
    seq.frames.resize(nt);
    for (auto& frame : seq.frames) {
        frame.resize(nv);
        for (auto& v : frame) {
            float xyz[3];
            read_raw(f, xyz, 3, "frame vertices");
            v = {double(xyz[0]), double(xyz[1]), double(xyz[2])};
        }
    }
    char extra;
    if (f.read(&extra, 1) && f.gcount() == 1)
        throw FormatError("trailing bytes after mesh sequence payload: " + path);
    for (const auto& face : seq.faces)
        for (uint32_t idx : face)
            if (idx >= nv) throw FormatError("face index out of range in " + path);
    return seq;
}

// --- cameras --------------------------------------------------------------------

void write_camera(const std::string& path, const Camera& cam) {
    std::ofstream f = open_out(path);
    f << "fx=" << fmt_double(cam.fx) << "\n";
    f << "fy=" << fmt_double(cam.fy) << "\n";
    f << "cx=" << fmt_double(cam.cx) << "\n";
    f << "cy=" << fmt_double(cam.cy) << "\n";
    f << "width=" << cam.width << "\n";
    f << "height=" << cam.height << "\n";
    f << "extrinsic=";
    for (int i = 0; i < 12; ++i) f << (i ? " " : "") << fmt_double(cam.extrinsic[size_t(i)]);
    f << "\n";
}

Camera read_camera(const std::string& path) {
    Camera cam;
    bool have_ext = false;
    for (const auto& [key, value] : read_key_values(path)) {
        std::istringstream vs(value);
        if (key == "fx") vs >> cam.fx;
        else if (key == "fy") vs >> cam.fy;
        else if (key == "cx") vs >> cam.cx;
        else if (key == "cy") vs >> cam.cy;
        else if (key == "width") vs >> cam.width;
        else if (key == "height") vs >> cam.height;
        else if (key == "extrinsic") {
            for (auto& e : cam.extrinsic) vs >> e;
            have_ext = true;
        } else {
            throw FormatError("unknown camera key '" + key + "' in " + path);
        }
        if (!vs) throw FormatError("malformed camera value for '" + key + "' in " + path);
    }
    if (!have_ext) throw FormatError("camera file missing extrinsic: " + path);
    cam.validate();
    return cam;
}

// --- images --------------------------------------------------------------------

void write_ppm(const std::string& path, const Image& img) {
    if (img.channels != 3) throw InvalidArgument("write_ppm: expected 3 channels");
    std::ofstream f = open_out(path);
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> row(size_t(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                float v = std::clamp(img.at(x, y, c), 0.0f, 1.0f);
                row[size_t(x * 3 + c)] = uint8_t(std::lround(v * 255.0f));
            }
        write_raw(f, row.data(), row.size());
    }
}

Image read_ppm(const std::string& path) {
    std::ifstream f = open_in(path);
    std::string magic;
    f >> magic;
    if (magic != "P6") throw FormatError("bad magic in PPM: " + path);
    int w = 0, h = 0, maxval = 0;
    f >> w >> h >> maxval;
    if (!f || w <= 0 || h <= 0) throw FormatError("malformed PPM header: " + path);
    if (maxval != 255) throw FormatError("unsupported PPM maxval in " + path);
    f.get();
    Image img;
    img.width = w;
    img.height = h;
    img.channels = 3;
    img.pixels.resize(size_t(w) * size_t(h) * 3);
    std::vector<uint8_t> bytes(img.pixels.size());
    read_raw(f, bytes.data(), bytes.size(), "PPM pixels");
    for (size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = float(bytes[i]) / 255.0f;
    return img;
}

void write_float_map(const std::string& path, const Image& img, const std::vector<uint8_t>* mask) {
    std::ofstream f = open_out(path);
    f << "FMAP1\n" << img.width << " " << img.height << " " << img.channels << " "
      << (mask ? 1 : 0) << "\n";
    // Planar layout: one channel plane at a time.
    std::vector<float> plane(size_t(img.width) * size_t(img.height));
    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                plane[size_t(y * img.width + x)] = img.at(x, y, c);
        write_raw(f, plane.data(), plane.size());
    }
    if (mask) {
        if (mask->size() != size_t(img.width) * size_t(img.height))
            throw InvalidArgument("write_float_map: mask size mismatch");
        write_raw(f, mask->data(), mask->size());
    }
}

Image read_float_map(const std::string& path, std::vector<uint8_t>* mask) {
    std::ifstream f = open_in(path);
    std::string magic;
    f >> magic;
    if (magic != "FMAP1") throw FormatError("bad magic in float map: " + path);
    int w = 0, h = 0, c = 0, has_mask = 0;
    f >> w >> h >> c >> has_mask;
    if (!f || w <= 0 || h <= 0 || c <= 0) throw FormatError("malformed float map header: " + path);
    f.get();
    Image img;
    img.width = w;
    img.height = h;
    img.channels = c;
    img.pixels.resize(size_t(w) * size_t(h) * size_t(c));
    std::vector<float> plane(size_t(w) * size_t(h));
    for (int ch = 0; ch < c; ++ch) {
        read_raw(f, plane.data(), plane.size(), "float map plane");
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) img.at(x, y, ch) = plane[size_t(y * w + x)];
    }
    if (has_mask) {
        std::vector<uint8_t> m(size_t(w) * size_t(h));
        read_raw(f, m.data(), m.size(), "float map mask");
        if (mask) *mask = std::move(m);
    } else if (mask) {
        mask->assign(size_t(w) * size_t(h), 1);
    }
    return img;
}

void write_uv_map(const std::string& path, const UvMap& map) {
    Image img;
    img.width = map.width;
    img.height = map.height;
    img.channels = map.channels;
    img.pixels = map.data;
    write_float_map(path, img, &map.mask);
}

UvMap read_uv_map(const std::string& path) {
    UvMap map;
    Image img = read_float_map(path, &map.mask);
    map.width = img.width;
    map.height = img.height;
    map.channels = img.channels;
    map.data = std::move(img.pixels);
    return map;
}

// --- checkpoints ------------------------------------------------------------------

uint64_t fnv1a64(const void* data, size_t size) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_checkpoint(const std::string& path, const NamedTensors& tensors) {
    std::set<std::string> seen;
    for (const auto& [name, t] : tensors)
        if (!seen.insert(name).second)
            throw InvalidArgument("write_checkpoint: duplicate tensor name " + name);

    // Serialize the table first so the checksum covers exactly the payload.
    std::ostringstream body(std::ios::binary);
    uint32_t count = uint32_t(tensors.size());
    write_raw(body, &count, 1);
    for (const auto& [name, t] : tensors) {
        uint32_t name_len = uint32_t(name.size());
        write_raw(body, &name_len, 1);
        body.write(name.data(), std::streamsize(name.size()));
        uint32_t rank = uint32_t(t.shape.size());
        write_raw(body, &rank, 1);
        for (int d : t.shape) {
            uint32_t dim = uint32_t(d);
            write_raw(body, &dim, 1);
        }
        write_raw(body, t.v.data(), t.v.size());
    }
    std::string payload = body.str();
    uint64_t checksum = fnv1a64(payload.data(), payload.size());

    std::ofstream f = open_out(path);
    f.write("SURM", 4);
    uint32_t version = 1;
    write_raw(f, &version, 1);
    f.write(payload.data(), std::streamsize(payload.size()));
    write_raw(f, &checksum, 1);
}

NamedTensors read_checkpoint(const std::string& path) {
    std::ifstream f = open_in(path);
    char magic[4];
    read_raw(f, magic, 4, "checkpoint magic");
    if (std::memcmp(magic, "SURM", 4) != 0) throw FormatError("bad magic in checkpoint: " + path);
    uint32_t version = 0;
    read_raw(f, &version, 1, "checkpoint version");
    if (version != 1)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));

    std::string payload((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (payload.size() < sizeof(uint64_t)) throw FormatError("truncated checkpoint: " + path);
    uint64_t stored;
    std::memcpy(&stored, payload.data() + payload.size() - sizeof(uint64_t), sizeof(uint64_t));
    payload.resize(payload.size() - sizeof(uint64_t));
    if (fnv1a64(payload.data(), payload.size()) != stored)
        throw FormatError("checkpoint checksum mismatch: " + path);

    std::istringstream body(payload, std::ios::binary);
    uint32_t count = 0;
    read_raw(body, &count, 1, "tensor count");
    NamedTensors out;
    std::set<std::string> seen;
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = 0;
        read_raw(body, &name_len, 1, "tensor name length");
        if (name_len > 4096) throw FormatError("implausible tensor name length in " + path);
        std::string name(name_len, '\0');
        body.read(name.data(), name_len);
        if (size_t(body.gcount()) != name_len) throw FormatError("truncated tensor name in " + path);
        if (!seen.insert(name).second)
            throw FormatError("duplicate tensor name '" + name + "' in " + path);
        uint32_t rank = 0;
        read_raw(body, &rank, 1, "tensor rank");
        if (rank > 8) throw FormatError("implausible tensor rank in " + path);
        std::vector<int> shape(rank);
        for (auto& d : shape) {
            uint32_t dim = 0;
            read_raw(body, &dim, 1, "tensor dims");
            d = int(dim);
        }
        Tensor t(shape);
        read_raw(body, t.v.data(), t.v.size(), "tensor payload");
        out.emplace_back(std::move(name), std::move(t));
    }
    char extra;
    if (body.read(&extra, 1) && body.gcount() == 1)
        throw FormatError("trailing bytes in checkpoint table: " + path);
    return out;
}

// --- key=value ----------------------------------------------------------------------

std::vector<std::pair<std::string, std::string>> read_key_values(const std::string& path) {
    std::ifstream f = open_in(path);
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("expected key=value in " + path + ": " + line);
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        while (!key.empty() && key.back() == ' ') key.pop_back();
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        kv.emplace_back(std::move(key), std::move(value));
    }
    return kv;
}

void write_key_values(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ofstream f = open_out(path);
    for (const auto& [k, v] : kv) f << k << "=" << v << "\n";
}

}  // namespace surmo::io
