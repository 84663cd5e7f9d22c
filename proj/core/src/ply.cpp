#include "holosplat/ply.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace holosplat {

namespace {

struct Property {
    std::string name;
    char type = 'f';  // f=float32, d=float64, B=uint8
    std::size_t offset = 0;
};

struct VertexLayout {
    std::vector<Property> props;
    std::size_t stride = 0;
    std::size_t count = 0;
    bool ascii = false;

    const Property* find(const std::string& name) const {
        for (const auto& p : props)
            if (p.name == name) return &p;
        return nullptr;
    }
};

std::size_t type_size(char t) { return t == 'B' ? 1 : (t == 'd' ? 8 : 4); }

char parse_type(const std::string& s) {
    if (s == "float" || s == "float32") return 'f';
    if (s == "double" || s == "float64") return 'd';
    if (s == "uchar" || s == "uint8") return 'B';
    throw PlyError("ply: unsupported property type " + s);
}

VertexLayout parse_header(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "ply") throw PlyError("ply: missing magic");
    VertexLayout layout;
    bool in_vertex = false;
    bool format_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt == "ascii") layout.ascii = true;
            else if (fmt != "binary_little_endian") throw PlyError("ply: unsupported format " + fmt);
            format_seen = true;
        } else if (tok == "element") {
            std::string name;
            std::size_t count;
            ss >> name >> count;
            in_vertex = (name == "vertex");
            if (in_vertex) layout.count = count;
            else if (layout.count == 0 && !in_vertex) continue;
            else if (!in_vertex) throw PlyError("ply: non-vertex element after vertex unsupported");
        } else if (tok == "property" && in_vertex) {
            std::string type, name;
            ss >> type;
            if (type == "list") throw PlyError("ply: list properties unsupported");
            ss >> name;
            Property p;
            p.name = name;
            p.type = parse_type(type);
            p.offset = layout.stride;
            layout.stride += type_size(p.type);
            layout.props.push_back(p);
        } else if (tok == "end_header") {
            if (!format_seen) throw PlyError("ply: missing format line");
            return layout;
        }
    }
    throw PlyError("ply: truncated header");
}

std::vector<std::uint8_t> read_payload(std::istream& in, const VertexLayout& layout) {
    std::vector<std::uint8_t> data(layout.stride * layout.count);
    if (layout.ascii) {
        for (std::size_t v = 0; v < layout.count; ++v) {
            for (const auto& p : layout.props) {
                double value;
                if (!(in >> value)) throw PlyError("ply: truncated ascii payload");
                std::uint8_t* dst = data.data() + v * layout.stride + p.offset;
                if (p.type == 'f') {
                    float f = float(value);
                    std::memcpy(dst, &f, 4);
                } else if (p.type == 'd') {
                    std::memcpy(dst, &value, 8);
                } else {
                    *dst = std::uint8_t(value);
                }
            }
        }
    } else {
        in.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size()));
        if (std::size_t(in.gcount()) != data.size()) throw PlyError("ply: truncated payload");
    }
    return data;
}

double get_value(const std::vector<std::uint8_t>& data, const VertexLayout& layout,
                 std::size_t vertex, const Property& p) {
    const std::uint8_t* src = data.data() + vertex * layout.stride + p.offset;
    if (p.type == 'f') {
        float f;
        std::memcpy(&f, src, 4);
        return f;
    }
    if (p.type == 'd') {
        double d;
        std::memcpy(&d, src, 8);
        return d;
    }
    return *src;
}

class AtomicWriter {
public:
    explicit AtomicWriter(const std::filesystem::path& path)
        : path_(path), tmp_(path.string() + ".tmp"), out_(tmp_, std::ios::binary) {
        if (!out_) throw PlyError("ply: cannot open " + tmp_.string());
    }
    std::ofstream& stream() { return out_; }
    void commit() {
        out_.close();
        std::filesystem::rename(tmp_, path_);
    }

private:
    std::filesystem::path path_, tmp_;
    std::ofstream out_;
};

void put_float(std::ofstream& out, double v) {
    const float f = float(v);
    out.write(reinterpret_cast<const char*>(&f), 4);
}

} // namespace

void write_ply(const PointCloud& cloud, const std::filesystem::path& path) {
    AtomicWriter writer(path);
    auto& out = writer.stream();
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << cloud.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (cloud.has_colors())
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int a = 0; a < 3; ++a) put_float(out, cloud.positions[i][a]);
        if (cloud.has_colors()) {
            for (int a = 0; a < 3; ++a) {
                const double c = std::clamp(cloud.colors[i][a], 0.0, 1.0);
                const std::uint8_t byte = std::uint8_t(std::lround(c * 255.0));
                out.write(reinterpret_cast<const char*>(&byte), 1);
            }
        }
    }
    writer.commit();
}

PointCloud read_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PlyError("ply: cannot open " + path.string());
    const VertexLayout layout = parse_header(in);
    const auto data = read_payload(in, layout);

    const Property* px = layout.find("x");
    const Property* py = layout.find("y");
    const Property* pz = layout.find("z");
    if (!px || !py || !pz) throw PlyError("ply: missing x/y/z properties");
    const Property* pr = layout.find("red");
    const Property* pg = layout.find("green");
    const Property* pb = layout.find("blue");

    PointCloud cloud;
    cloud.positions.reserve(layout.count);
    for (std::size_t v = 0; v < layout.count; ++v) {
        cloud.positions.emplace_back(get_value(data, layout, v, *px),
                                     get_value(data, layout, v, *py),
                                     get_value(data, layout, v, *pz));
        if (pr && pg && pb)
            cloud.colors.emplace_back(get_value(data, layout, v, *pr) / 255.0,
                                      get_value(data, layout, v, *pg) / 255.0,
                                      get_value(data, layout, v, *pb) / 255.0);
    }
    return cloud;
}

void write_gaussian_ply(const GaussianSet& g, const std::filesystem::path& path) {
    const int basis = g.sh_basis();
    AtomicWriter writer(path);
    auto& out = writer.stream();
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << g.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    for (int c = 0; c < 3; ++c) out << "property float f_dc_" << c << "\n";
    for (int j = 0; j < 3 * (basis - 1); ++j) out << "property float f_rest_" << j << "\n";
    out << "property float opacity\n";
    for (int a = 0; a < 3; ++a) out << "property float scale_" << a << "\n";
    for (int a = 0; a < 4; ++a) out << "property float rot_" << a << "\n";
    out << "end_header\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (int a = 0; a < 3; ++a) put_float(out, g.centers[i][a]);
        const Vec3* sh = g.sh_of(i);
        for (int ch = 0; ch < 3; ++ch) put_float(out, sh[0][ch]);
        // rest coefficients channel-major, matching the common viewer layout
        for (int ch = 0; ch < 3; ++ch)
            for (int b = 1; b < basis; ++b) put_float(out, sh[b][ch]);
        put_float(out, g.opacity_logits[i]);
        for (int a = 0; a < 3; ++a) put_float(out, g.log_scales[i][a]);
        for (int a = 0; a < 4; ++a) put_float(out, g.rotations[i][a]);
    }
    writer.commit();
}

GaussianSet read_gaussian_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PlyError("ply: cannot open " + path.string());
    const VertexLayout layout = parse_header(in);
    const auto data = read_payload(in, layout);

    int rest = 0;
    while (layout.find("f_rest_" + std::to_string(rest))) ++rest;
    if (rest % 3 != 0) throw PlyError("ply: f_rest count is not a multiple of 3");
    const int basis = rest / 3 + 1;
    int degree = 0;
    while (sh_basis_size(degree) < basis) ++degree;
    if (sh_basis_size(degree) != basis || degree > kMaxShDegree)
        throw PlyError("ply: f_rest count does not match a supported SH degree");

    auto prop = [&](const std::string& name) -> const Property& {
        const Property* p = layout.find(name);
        if (!p) throw PlyError("ply: missing gaussian property " + name);
        return *p;
    };

    GaussianSet g;
    g.sh_degree = degree;
    g.resize(layout.count);
    for (std::size_t v = 0; v < layout.count; ++v) {
        g.centers[v] = Vec3(get_value(data, layout, v, prop("x")),
                            get_value(data, layout, v, prop("y")),
                            get_value(data, layout, v, prop("z")));
        Vec3* sh = g.sh_of(v);
        for (int ch = 0; ch < 3; ++ch)
            sh[0][ch] = get_value(data, layout, v, prop("f_dc_" + std::to_string(ch)));
        for (int ch = 0; ch < 3; ++ch)
            for (int b = 1; b < basis; ++b)
                sh[b][ch] = get_value(data, layout, v,
                                      prop("f_rest_" + std::to_string(ch * (basis - 1) + b - 1)));
        g.opacity_logits[v] = get_value(data, layout, v, prop("opacity"));
        for (int a = 0; a < 3; ++a)
            g.log_scales[v][a] = get_value(data, layout, v, prop("scale_" + std::to_string(a)));
        for (int a = 0; a < 4; ++a)
            g.rotations[v][a] = get_value(data, layout, v, prop("rot_" + std::to_string(a)));
    }
    return g;
}

} // namespace holosplat
