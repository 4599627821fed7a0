#include "ips/sensorio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "ips/errors.hpp"

namespace fs = std::filesystem;

namespace ips::sensorio {

namespace {

constexpr int kMinDim = 16;

void validate_dims(int width, int height, const std::string& what) {
    if (width < kMinDim || height < kMinDim)
        throw FormatError(what + ": frame dimensions " + std::to_string(width) + "x" +
                          std::to_string(height) + " below minimum " + std::to_string(kMinDim));
}

// Reads one whitespace-delimited PGM header token, skipping `#` comments.
std::string next_pnm_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

int parse_positive_int(const std::string& tok, const std::string& what) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || value <= 0)
        throw FormatError(what + ": bad PGM header token '" + tok + "'");
    return value;
}

// Splits a delimited text line into fields; returns false for blank/comment.
bool split_csv(const std::string& line, std::vector<std::string>& fields) {
    fields.clear();
    size_t start = 0;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
    if (start >= line.size() || line[start] == '#') return false;
    std::string cur;
    for (size_t i = start; i < line.size(); ++i) {
        const char c = line[i];
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return true;
}

double parse_finite(const std::string& field, const fs::path& path, int line_no) {
    try {
        size_t pos = 0;
        const double v = std::stod(field, &pos);
        while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) ++pos;
        if (pos != field.size()) throw std::invalid_argument(field);
        if (!std::isfinite(v))
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": non-finite value '" + field + "'");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                         field + "'");
    }
}

// True when the first data line looks like a column header rather than numbers.
bool is_header_line(const std::string& line) {
    for (const char c : line) {
        if (std::isalpha(static_cast<unsigned char>(c)) && c != 'e' && c != 'E' && c != 'n' &&
            c != 'N' && c != 'a' && c != 'A' && c != 'i' && c != 'I' && c != 'f' && c != 'F')
            return true;
    }
    return false;
}

}  // namespace

Frame read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open frame file: " + path.string());

    const std::string magic = next_pnm_token(in);
    if (magic != "P5") throw FormatError(path.string() + ": not a binary PGM (P5) file");
    const int width = parse_positive_int(next_pnm_token(in), path.string());
    const int height = parse_positive_int(next_pnm_token(in), path.string());
    const int maxval = parse_positive_int(next_pnm_token(in), path.string());
    if (maxval != 255) throw FormatError(path.string() + ": only maxval 255 supported");
    validate_dims(width, height, path.string());

    Frame frame;
    frame.width = width;
    frame.height = height;
    frame.pixels.resize(static_cast<size_t>(width) * height);
    in.read(reinterpret_cast<char*>(frame.pixels.data()),
            static_cast<std::streamsize>(frame.pixels.size()));
    if (static_cast<size_t>(in.gcount()) != frame.pixels.size())
        throw FormatError(path.string() + ": truncated pixel data");
    return frame;
}

void write_pgm(const Frame& frame, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write frame file: " + path.string());
    out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.pixels.data()),
              static_cast<std::streamsize>(frame.pixels.size()));
    if (!out) throw IoError("short write: " + path.string());
}

std::vector<Frame> load_frames(const fs::path& directory, std::optional<double> fps_fallback) {
    if (!fs::is_directory(directory))
        throw IoError("frame directory does not exist: " + directory.string());

    std::vector<Frame> frames;
    for (int index = 0;; ++index) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%06d.pgm", index);
        const fs::path file = directory / name;
        if (!fs::exists(file)) break;
        Frame frame = read_pgm(file);
        frame.index = index;
        frames.push_back(std::move(frame));
    }
    if (frames.empty()) throw IoError("no frame_%06d.pgm files in " + directory.string());

    for (const Frame& f : frames) {
        if (f.width != frames[0].width || f.height != frames[0].height)
            throw FormatError(directory.string() + ": frame " + std::to_string(f.index) +
                              " dimensions differ from frame 0");
    }

    const fs::path sidecar = directory / "frames.times";
    if (fs::exists(sidecar)) {
        std::ifstream in(sidecar);
        if (!in) throw IoError("cannot open timing sidecar: " + sidecar.string());
        std::vector<double> times(frames.size(), std::nan(""));
        std::string line;
        std::vector<std::string> fields;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!split_csv(line, fields)) continue;
            if (fields.size() != 2)
                throw ParseError(sidecar.string() + ":" + std::to_string(line_no) +
                                 ": expected 'index,seconds'");
            const int idx = static_cast<int>(parse_finite(fields[0], sidecar, line_no));
            if (idx < 0 || static_cast<size_t>(idx) >= frames.size())
                throw ParseError(sidecar.string() + ":" + std::to_string(line_no) +
                                 ": index " + fields[0] + " out of range");
            times[idx] = parse_finite(fields[1], sidecar, line_no);
        }
        for (size_t i = 0; i < frames.size(); ++i) {
            if (std::isnan(times[i]))
                throw FormatError(sidecar.string() + ": missing time for frame " +
                                  std::to_string(i));
            frames[i].t = times[i];
        }
    } else if (fps_fallback) {
        if (*fps_fallback <= 0.0) throw ParamError("fps must be positive");
        for (size_t i = 0; i < frames.size(); ++i) frames[i].t = static_cast<double>(i) / *fps_fallback;
    } else {
        throw IoError("missing timing sidecar " + sidecar.string() +
                      " (pass --fps for uniform timing)");
    }

    for (size_t i = 1; i < frames.size(); ++i) {
        if (!(frames[i].t > frames[i - 1].t))
            throw FormatError(directory.string() + ": non-monotone timestamps at frame " +
                              std::to_string(i));
    }
    return frames;
}

void write_frames(const std::vector<Frame>& frames, const fs::path& directory) {
    fs::create_directories(directory);
    std::ofstream times(directory / "frames.times");
    if (!times) throw IoError("cannot write sidecar in " + directory.string());
    char buf[64];
    for (const Frame& f : frames) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%06d.pgm", f.index);
        write_pgm(f, directory / name);
        std::snprintf(buf, sizeof(buf), "%d,%.9f\n", f.index, f.t);
        times << buf;
    }
}

std::vector<ImuSample> load_imu(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open IMU log: " + path.string());
    std::vector<ImuSample> samples;
    std::string line;
    std::vector<std::string> fields;
    int line_no = 0;
    bool first_data = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!split_csv(line, fields)) continue;
        if (first_data && is_header_line(line)) {
            first_data = false;
            continue;
        }
        first_data = false;
        if (fields.size() != 7)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 7 fields 't,gx,gy,gz,ax,ay,az', got " +
                             std::to_string(fields.size()));
        ImuSample s;
        s.t = parse_finite(fields[0], path, line_no);
        parse_finite(fields[1], path, line_no);  // gx: validated, unused
        parse_finite(fields[2], path, line_no);  // gy: validated, unused
        s.gyro_z = parse_finite(fields[3], path, line_no);
        s.accel[0] = parse_finite(fields[4], path, line_no);
        s.accel[1] = parse_finite(fields[5], path, line_no);
        s.accel[2] = parse_finite(fields[6], path, line_no);
        if (!samples.empty() && !(s.t > samples.back().t))
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": non-monotone timestamp");
        samples.push_back(s);
    }
    return samples;
}

std::vector<RangeSample> load_ranges(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open LIDAR log: " + path.string());
    std::vector<RangeSample> samples;
    std::string line;
    std::vector<std::string> fields;
    int line_no = 0;
    bool first_data = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!split_csv(line, fields)) continue;
        if (first_data && is_header_line(line)) {
            first_data = false;
            continue;
        }
        first_data = false;
        if (fields.size() != 2)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 't,distance_m'");
        RangeSample s;
        s.t = parse_finite(fields[0], path, line_no);
        s.distance = parse_finite(fields[1], path, line_no);
        if (s.distance < 0.0)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": negative distance " + fields[1]);
        if (!samples.empty() && !(s.t > samples.back().t))
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": non-monotone timestamp");
        samples.push_back(s);
    }
    return samples;
}

void write_imu(const std::vector<ImuSample>& samples, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write IMU log: " + path.string());
    out << "t,gx,gy,gz,ax,ay,az\n";
    char buf[256];
    for (const ImuSample& s : samples) {
        std::snprintf(buf, sizeof(buf), "%.9f,0,0,%.9f,%.9f,%.9f,%.9f\n", s.t, s.gyro_z,
                      s.accel[0], s.accel[1], s.accel[2]);
        out << buf;
    }
}

void write_ranges(const std::vector<RangeSample>& samples, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write LIDAR log: " + path.string());
    out << "t,distance_m\n";
    char buf[128];
    for (const RangeSample& s : samples) {
        std::snprintf(buf, sizeof(buf), "%.9f,%.9f\n", s.t, s.distance);
        out << buf;
    }
}

std::vector<double> sample_gyro_heading(const std::vector<ImuSample>& imu,
                                        const std::vector<double>& frame_times) {
    if (imu.empty()) throw ParamError("sample_gyro_heading: empty IMU sequence");

    // Trapezoidal cumulative integral of yaw rate at IMU times.
    std::vector<double> heading(imu.size(), 0.0);
    for (size_t i = 1; i < imu.size(); ++i) {
        const double dt = imu[i].t - imu[i - 1].t;
        heading[i] = heading[i - 1] + 0.5 * (imu[i].gyro_z + imu[i - 1].gyro_z) * dt;
    }

    double slack = 0.0;
    if (imu.size() > 1) slack = (imu.back().t - imu.front().t) / static_cast<double>(imu.size() - 1);

    std::vector<double> out;
    out.reserve(frame_times.size());
    for (const double t : frame_times) {
        if (t < imu.front().t - slack || t > imu.back().t + slack)
            throw AlignError("frame time " + std::to_string(t) + " outside gyro coverage [" +
                             std::to_string(imu.front().t) + ", " + std::to_string(imu.back().t) +
                             "]");
        if (t <= imu.front().t) {
            out.push_back(heading.front());
            continue;
        }
        if (t >= imu.back().t) {
            out.push_back(heading.back());
            continue;
        }
        const auto it = std::upper_bound(imu.begin(), imu.end(), t,
                                         [](double q, const ImuSample& s) { return q < s.t; });
        const size_t i = static_cast<size_t>(it - imu.begin()) - 1;
        const double t0 = imu[i].t;
        const double t1 = imu[i + 1].t;
        const double a = (t - t0) / (t1 - t0);
        out.push_back(heading[i] + a * (heading[i + 1] - heading[i]));
    }
    if (!out.empty()) {
        const double offset = out.front();
        for (double& h : out) h -= offset;
    }
    return out;
}

GrayImage to_gray(const Frame& frame) {
    GrayImage img(frame.width, frame.height);
    constexpr float kInv = 1.0f / 255.0f;
    for (size_t i = 0; i < frame.pixels.size(); ++i) img.data[i] = frame.pixels[i] * kInv;
    return img;
}

Frame from_gray(const GrayImage& img, int index, double t) {
    Frame frame;
    frame.index = index;
    frame.t = t;
    frame.width = img.width;
    frame.height = img.height;
    frame.pixels.resize(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) {
        const float v = std::round(img.data[i] * 255.0f);
        frame.pixels[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f));
    }
    return frame;
}

}  // namespace ips::sensorio
