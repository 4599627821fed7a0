#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "ips/image.hpp"

namespace ips::sensorio {

/// One grayscale frame. Pixels are row-major intensities in [0, 255].
struct Frame {
    int index = 0;
    double t = 0.0;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};

/// One IMU record. gyro_z is the yaw rate in degrees/second, positive
/// counter-clockwise about the vertical axis. accel is in m/s^2, body frame,
/// x pointing along the walking direction.
struct ImuSample {
    double t = 0.0;
    double gyro_z = 0.0;
    std::array<double, 3> accel{0.0, 0.0, 0.0};
};

/// One LIDAR record: range to the facing wall in meters.
struct RangeSample {
    double t = 0.0;
    double distance = 0.0;
};

/// Read a binary PGM (P5) file.
Frame read_pgm(const std::filesystem::path& path);

/// Write a binary PGM (P5) file.
void write_pgm(const Frame& frame, const std::filesystem::path& path);

/// Load `frame_%06d.pgm` files from a directory in index order. Timing comes
/// from the `frames.times` sidecar (lines `index,seconds`); when the sidecar
/// is absent, `fps_fallback` supplies uniform timing at t = index / fps.
std::vector<Frame> load_frames(const std::filesystem::path& directory,
                               std::optional<double> fps_fallback = std::nullopt);

/// Write frames plus the `frames.times` sidecar; inverse of load_frames.
void write_frames(const std::vector<Frame>& frames, const std::filesystem::path& directory);

/// Parse an IMU log: `t,gx,gy,gz,ax,ay,az` per line, optional header,
/// `#` comments skipped. Angles deg/s, acceleration m/s^2.
std::vector<ImuSample> load_imu(const std::filesystem::path& path);

/// Parse a LIDAR log: `t,distance_m` per line, same conventions as load_imu.
std::vector<RangeSample> load_ranges(const std::filesystem::path& path);

void write_imu(const std::vector<ImuSample>& samples, const std::filesystem::path& path);
void write_ranges(const std::vector<RangeSample>& samples, const std::filesystem::path& path);

/// Integrate gyro_z by the trapezoidal rule and linearly interpolate the
/// resulting heading at the given frame times, offset so the heading at the
/// first frame time is zero. Frame times may overhang the IMU coverage by at
/// most one mean sample interval (values clamp to the ends).
std::vector<double> sample_gyro_heading(const std::vector<ImuSample>& imu,
                                        const std::vector<double>& frame_times);

/// Normalize pixels to [0, 1] floats.
GrayImage to_gray(const Frame& frame);

/// Quantize a [0, 1] raster back to a frame (rounding, clamped).
Frame from_gray(const GrayImage& img, int index, double t);

}  // namespace ips::sensorio
