#include "assgd/checkpoint.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "assgd/error.hpp"

namespace assgd {

namespace {

constexpr const char* kMagic = "assgd-checkpoint";
constexpr int kVersion = 1;

void put(std::ostream& out, double v) {
    std::array<char, 32> buf{};
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.write(buf.data(), p - buf.data());
}

void expect(std::istream& in, const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word) throw FormatError("checkpoint: expected '" + word + "', got '" + got + "'");
}

double get(std::istream& in) {
    std::string tok;
    if (!(in >> tok)) throw FormatError("checkpoint: truncated parameter data");
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) throw FormatError("checkpoint: bad value '" + tok + "'");
    return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams& params) {
    out << kMagic << ' ' << kVersion << '\n';
    out << "kind " << (params.kind == ModelKind::linear ? "linear" : "mlp") << '\n';
    out << "layers " << params.layers.size() << '\n';
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        const auto& l = params.layers[k];
        out << "layer " << k << ' ' << l.weight.rows() << ' ' << l.weight.cols() << ' ' << (l.has_bias ? 1 : 0) << ' '
            << to_string(l.activation) << '\n';
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
                if (c) out << ' ';
                put(out, l.weight(r, c));
            }
            out << '\n';
        }
        if (l.has_bias) {
            for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
                if (r) out << ' ';
                put(out, l.bias[r]);
            }
            out << '\n';
        }
    }
}

ModelParams read_checkpoint(std::istream& in) {
    expect(in, kMagic);
    int version = 0;
    if (!(in >> version) || version != kVersion) throw FormatError("checkpoint: unsupported version");
    expect(in, "kind");
    std::string kind;
    in >> kind;
    ModelParams p;
    if (kind == "linear") p.kind = ModelKind::linear;
    else if (kind == "mlp") p.kind = ModelKind::mlp;
    else throw FormatError("checkpoint: unknown model kind '" + kind + "'");
    expect(in, "layers");
    std::size_t n_layers = 0;
    if (!(in >> n_layers) || n_layers == 0 || n_layers > 1024) throw FormatError("checkpoint: bad layer count");
    for (std::size_t k = 0; k < n_layers; ++k) {
        expect(in, "layer");
        std::size_t idx = 0, rows = 0, cols = 0;
        int bias = 0;
        std::string act;
        if (!(in >> idx >> rows >> cols >> bias >> act) || idx != k || rows == 0 || cols == 0)
            throw FormatError("checkpoint: bad layer header " + std::to_string(k));
        if (k > 0 && cols != p.layers.back().outputs())
            throw FormatError("checkpoint: layer shapes do not chain at layer " + std::to_string(k));
        Layer l;
        l.has_bias = bias != 0;
        try {
            l.activation = parse_activation(act);
        } catch (const ArgumentError& e) {
            throw FormatError(std::string("checkpoint: ") + e.what());
        }
        l.weight.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = get(in);
        if (l.has_bias) {
            l.bias.resize(static_cast<Eigen::Index>(rows));
            for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = get(in);
        }
        p.layers.push_back(std::move(l));
    }
    if (!p.all_finite()) throw FormatError("checkpoint: non-finite parameter");
    return p;
}

void save_checkpoint(const std::string& path, const ModelParams& params) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    write_checkpoint(out, params);
    if (!out) throw Error("write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return read_checkpoint(in);
}

}  // namespace assgd
