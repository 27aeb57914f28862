#pragma once

// On-disk formats.
//
// Images are binary 8-bit PGM (P5). Fields use a line-oriented text format:
//
//     DPIV-FIELD 1
//     <width> <height> <components>
//     <c0> [<c1>]            one line per pixel, row-major
//
// with every value printed in scientific notation to 9 significant digits.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "grid.hpp"

namespace dpiv {

// --------------------------------------------------------------------------
// PGM

namespace detail {

// Next whitespace-delimited header token; '#' comments run to end of line.
inline std::string pgm_token(std::istream& in) {
    std::string token;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!token.empty())
                return token;
            continue;
        }
        token.push_back(static_cast<char>(ch));
    }
    return token;
}

inline int pgm_int(std::istream& in, const char* what) {
    const std::string t = pgm_token(in);
    try {
        std::size_t used = 0;
        const int v = std::stoi(t, &used);
        if (used == t.size())
            return v;
    } catch (const std::exception&) {
    }
    throw Error(std::string("PGM: bad ") + what + " '" + t + "'");
}

} // namespace detail

inline ScalarImage read_pgm(std::istream& in) {
    if (detail::pgm_token(in) != "P5")
        throw Error("PGM: only binary P5 images are supported");
    const int w = detail::pgm_int(in, "width");
    const int h = detail::pgm_int(in, "height");
    const int maxval = detail::pgm_int(in, "maxval");
    if (w < 1 || h < 1)
        throw Error("PGM: non-positive dimensions");
    if (maxval < 1 || maxval > 255)
        throw Error("PGM: only 8-bit images are supported (maxval " + std::to_string(maxval) + ")");
    // pgm_token consumed exactly one whitespace byte after maxval.
    std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw Error("PGM: truncated pixel data");
    ScalarImage img(w, h);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        img.data()[i] = bytes[i];
    return img;
}

/// Values are rounded and clamped to [0, 255].
inline void write_pgm(std::ostream& out, const ScalarImage& img) {
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<unsigned char> bytes(img.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<unsigned char>(std::clamp(std::round(img.data()[i]), 0.0, 255.0));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// --------------------------------------------------------------------------
// DPIV-FIELD

/// Raw contents of a field file.
struct FieldData {
    int width = 0;
    int height = 0;
    int components = 0;
    std::vector<double> values; ///< interleaved per pixel
};

inline void write_field(std::ostream& out, const FieldData& f) {
    if (f.components != 1 && f.components != 2)
        throw Error("field: components must be 1 or 2");
    if (f.values.size() != static_cast<std::size_t>(f.width) * f.height * f.components)
        throw Error("field: value count does not match the header");
    out << "DPIV-FIELD 1\n" << f.width << ' ' << f.height << ' ' << f.components << '\n';
    char buf[64];
    for (std::size_t i = 0; i < f.values.size(); i += f.components) {
        std::snprintf(buf, sizeof buf, "%.8e", f.values[i]);
        out << buf;
        if (f.components == 2) {
            std::snprintf(buf, sizeof buf, " %.8e", f.values[i + 1]);
            out << buf;
        }
        out << '\n';
    }
}

inline FieldData read_field(std::istream& in) {
    std::string magic, version;
    in >> magic >> version;
    if (magic != "DPIV-FIELD" || version != "1")
        throw Error("field: missing 'DPIV-FIELD 1' header");
    FieldData f;
    if (!(in >> f.width >> f.height >> f.components))
        throw Error("field: malformed size line");
    if (f.width < 1 || f.height < 1)
        throw Error("field: non-positive dimensions");
    if (f.components != 1 && f.components != 2)
        throw Error("field: components must be 1 or 2, got " + std::to_string(f.components));
    f.values.resize(static_cast<std::size_t>(f.width) * f.height * f.components);
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (!(in >> f.values[i]))
            throw Error("field: expected " + std::to_string(f.values.size()) + " values, read " + std::to_string(i));
    std::string extra;
    if (in >> extra)
        throw Error("field: trailing data after the last pixel");
    return f;
}

template <class Tag>
FieldData to_field_data(const Field2<Tag>& f) {
    FieldData d{f.width(), f.height(), 2, {}};
    d.values.reserve(2 * f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        d.values.push_back(f.u().data()[i]);
        d.values.push_back(f.v().data()[i]);
    }
    return d;
}

inline FieldData to_field_data(const Raster<double>& r) { return {r.width(), r.height(), 1, r.data()}; }

inline VectorField to_vector_field(const FieldData& d) {
    if (d.components != 2)
        throw Error("field: expected 2 components, file has " + std::to_string(d.components));
    VectorField f(d.width, d.height);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.u().data()[i] = d.values[2 * i];
        f.v().data()[i] = d.values[2 * i + 1];
    }
    return f;
}

inline Raster<double> to_scalar_field(const FieldData& d) {
    if (d.components != 1)
        throw Error("field: expected 1 component, file has " + std::to_string(d.components));
    return Raster<double>(d.width, d.height, d.values);
}

// --------------------------------------------------------------------------
// Path helpers

namespace detail {

inline std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in)
        throw Error("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out)
        throw Error("cannot open '" + path + "' for writing");
    return out;
}

inline void finish(std::ofstream& out, const std::string& path) {
    out.close();
    if (!out)
        throw Error("write to '" + path + "' failed");
}

} // namespace detail

inline ScalarImage load_pgm(const std::string& path) {
    auto in = detail::open_in(path, std::ios::binary);
    try {
        return read_pgm(in);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

inline void save_pgm(const std::string& path, const ScalarImage& img) {
    auto out = detail::open_out(path, std::ios::binary);
    write_pgm(out, img);
    detail::finish(out, path);
}

inline FieldData load_field(const std::string& path) {
    auto in = detail::open_in(path);
    try {
        return read_field(in);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

inline void save_field(const std::string& path, const FieldData& f) {
    auto out = detail::open_out(path);
    write_field(out, f);
    detail::finish(out, path);
}

} // namespace dpiv
