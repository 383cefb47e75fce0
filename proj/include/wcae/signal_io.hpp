#pragma once

// Signal ingestion: WFDB header + format-212 signal files, a one-sample-per-
// line CSV format and a little-endian float32 format with a 16-byte header.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wcae/error.hpp"

namespace wcae::io {

struct SignalRecord {
    std::string name;
    std::vector<double> samples;
    double sampling_rate_hz = 360.0;

    double duration_s() const { return static_cast<double>(samples.size()) / sampling_rate_hz; }
    /// Throws InvalidInput if fs <= 0, samples empty or any sample non-finite.
    void validate() const;
};

/// Parse failures specific to WFDB input.
class WfdbError : public ParseError {
public:
    enum class Kind { MalformedHeader, UnsupportedFormat, TruncatedSignal, ChecksumMismatch };

    WfdbError(Kind kind, const std::string& what, std::uint64_t offset) : ParseError(what, offset), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

struct WfdbChannel {
    std::string file_name;
    int format = 212;
    double gain = 200.0;  ///< ADC units per physical unit
    int baseline = 0;
    std::string units = "mV";
    int adc_resolution = 12;
    int adc_zero = 0;
    int initial_value = 0;
    int checksum = 0;
    bool has_checksum = false;
    std::string description;
};

struct WfdbHeader {
    std::string record_name;
    double sampling_rate_hz = 250.0;
    std::uint64_t samples_per_channel = 0;  ///< 0 when the header omits it
    std::vector<WfdbChannel> channels;
};

WfdbHeader parse_wfdb_header(std::string_view text);
std::string format_wfdb_header(const WfdbHeader& header);

/// Two 12-bit two's-complement samples per 3 bytes:
///   byte0 = s0 bits 0-7, byte1 = (s1 bits 8-11) << 4 | (s0 bits 8-11), byte2 = s1 bits 0-7.
/// An odd sample count is padded with a zero sample.
std::string pack_212(std::span<const int> samples);
/// Unpacks exactly `count` samples. Throws WfdbError(TruncatedSignal) naming
/// the offset where data ran out.
std::vector<int> unpack_212(std::string_view bytes, std::size_t count);

/// 16-bit WFDB checksum of a channel's samples.
int wfdb_checksum(std::span<const int> samples);

/// Raw ADC values per channel, demultiplexed.
struct WfdbRecord {
    WfdbHeader header;
    std::vector<std::vector<int>> adc;
};

WfdbRecord read_wfdb_adc(std::string_view header_text, std::string_view signal_bytes);

/// One SignalRecord per channel with (adc - baseline) / gain applied.
/// Records are named "<record>" for channel 0 and "<record>_ch<i>" otherwise.
/// An empty signal_path uses the header's file name next to the header.
std::vector<SignalRecord> read_wfdb_record(const std::string& header_path, const std::string& signal_path = "");

/// Writes <dir>/<name>.hea and <dir>/<name>.dat for the given ADC channels.
void write_wfdb_record(const std::string& dir, const std::string& name, double fs,
                       const std::vector<std::vector<int>>& adc, double gain = 200.0, int baseline = 0);

/// Quantizes physical samples to ADC values and writes them; values are
/// clamped to the 12-bit range.
void write_wfdb_physical(const std::string& dir, const std::string& name, double fs,
                         const std::vector<std::vector<double>>& channels, double gain = 200.0, int baseline = 0);

/// CSV: one sample per line, optional "# fs=<Hz>" comment line, blank lines ignored.
SignalRecord parse_csv_signal(std::string_view text, const std::string& name, double default_fs = 360.0);
std::string format_csv_signal(const SignalRecord& record);

/// Raw float: "WSIG" magic, u32 version (1), f32 fs, u32 length, then length f32 samples.
SignalRecord parse_raw_signal(std::string_view bytes, const std::string& name);
std::string format_raw_signal(const SignalRecord& record);

enum class SignalFormat { Wfdb, Csv, Raw };

/// By extension: .hea -> Wfdb, .csv/.txt -> Csv, anything else -> Raw.
SignalFormat format_from_path(const std::string& path);
/// Loads a single-lead record (channel 0 for WFDB).
SignalRecord load_signal(const std::string& path);
/// Writes Csv or Raw according to the extension; WFDB output is not
/// supported through this path.
void save_signal(const std::string& path, const SignalRecord& record);

}  // namespace wcae::io
