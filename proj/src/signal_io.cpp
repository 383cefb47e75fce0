#include "wcae/signal_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "wcae/binary_io.hpp"

namespace wcae::io {

void SignalRecord::validate() const {
    if (!(sampling_rate_hz > 0.0) || !std::isfinite(sampling_rate_hz)) {
        throw InvalidInput("record " + name + ": sampling rate must be positive");
    }
    if (samples.empty()) throw InvalidInput("record " + name + ": no samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i])) {
            throw InvalidInput("record " + name + ": non-finite sample at index " + std::to_string(i));
        }
    }
}

namespace {

struct Token {
    std::string_view text;
    std::uint64_t offset;
};

std::vector<Token> split_tokens(std::string_view line, std::uint64_t base) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i >= line.size()) break;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        out.push_back({line.substr(start, i - start), base + start});
    }
    return out;
}

[[noreturn]] void header_error(const std::string& what, std::uint64_t offset) {
    throw WfdbError(WfdbError::Kind::MalformedHeader, "wfdb header: " + what, offset);
}

template <typename T>
T parse_number(std::string_view text, std::uint64_t offset, const char* field) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        header_error(std::string("bad ") + field + " '" + std::string(text) + "'", offset);
    }
    return value;
}

// Leading numeric prefix of tokens like "360/360(0)" or "212x2:1+0".
std::string_view numeric_prefix(std::string_view text) {
    std::size_t n = 0;
    while (n < text.size() && (std::isdigit(static_cast<unsigned char>(text[n])) || text[n] == '.' ||
                               text[n] == '-' || text[n] == '+' || text[n] == 'e' || text[n] == 'E')) {
        if ((text[n] == '-' || text[n] == '+') && n > 0 && text[n - 1] != 'e' && text[n - 1] != 'E') break;
        ++n;
    }
    return text.substr(0, n);
}

}  // namespace

WfdbHeader parse_wfdb_header(std::string_view text) {
    WfdbHeader h;
    std::vector<std::pair<std::string_view, std::uint64_t>> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        const auto first = line.find_first_not_of(" \t\r");
        if (first != std::string_view::npos && line[first] != '#') lines.emplace_back(line, pos);
        if (end == text.size()) break;
        pos = end + 1;
    }
    if (lines.empty()) header_error("no record line", 0);

    const auto rec = split_tokens(lines[0].first, lines[0].second);
    if (rec.size() < 2) header_error("record line needs a name and a signal count", lines[0].second);
    const std::string_view name = rec[0].text.substr(0, rec[0].text.find('/'));
    if (rec[0].text.find('/') != std::string_view::npos) {
        header_error("multi-segment records are not supported", rec[0].offset);
    }
    h.record_name = std::string(name);
    const int nsig = parse_number<int>(rec[1].text, rec[1].offset, "signal count");
    if (nsig < 1) header_error("record declares no signals", rec[1].offset);
    if (rec.size() > 2) {
        const auto fs_text = numeric_prefix(rec[2].text);
        h.sampling_rate_hz = parse_number<double>(fs_text, rec[2].offset, "sampling frequency");
        if (!(h.sampling_rate_hz > 0.0)) header_error("sampling frequency must be positive", rec[2].offset);
    }
    if (rec.size() > 3) h.samples_per_channel = parse_number<std::uint64_t>(rec[3].text, rec[3].offset, "sample count");

    if (lines.size() < static_cast<std::size_t>(nsig) + 1) {
        header_error("expected " + std::to_string(nsig) + " signal lines, found " + std::to_string(lines.size() - 1),
                     text.size());
    }
    for (int s = 0; s < nsig; ++s) {
        const auto& [line, base] = lines[static_cast<std::size_t>(s) + 1];
        const auto tok = split_tokens(line, base);
        if (tok.size() < 2) header_error("signal line needs a file name and a format", base);
        WfdbChannel ch;
        ch.file_name = std::string(tok[0].text);
        const auto fmt_text = tok[1].text.substr(0, tok[1].text.find_first_of("x:+"));
        ch.format = parse_number<int>(fmt_text, tok[1].offset, "format");
        if (tok[1].text.size() != fmt_text.size()) {
            throw WfdbError(WfdbError::Kind::UnsupportedFormat,
                            "wfdb header: samples-per-frame, skew and byte offset modifiers are not supported",
                            tok[1].offset);
        }
        if (ch.format != 212) {
            throw WfdbError(WfdbError::Kind::UnsupportedFormat,
                            "wfdb header: unsupported signal format " + std::to_string(ch.format) + " (only 212)",
                            tok[1].offset);
        }
        bool baseline_given = false;
        if (tok.size() > 2) {
            std::string_view g = tok[2].text;
            const auto slash = g.find('/');
            if (slash != std::string_view::npos) {
                ch.units = std::string(g.substr(slash + 1));
                g = g.substr(0, slash);
            }
            const auto paren = g.find('(');
            if (paren != std::string_view::npos) {
                if (g.back() != ')') header_error("unterminated baseline in gain field", tok[2].offset);
                ch.baseline = parse_number<int>(g.substr(paren + 1, g.size() - paren - 2), tok[2].offset, "baseline");
                baseline_given = true;
                g = g.substr(0, paren);
            }
            ch.gain = parse_number<double>(g, tok[2].offset, "gain");
            if (ch.gain == 0.0) ch.gain = 200.0;
            if (ch.gain < 0.0) header_error("negative gain", tok[2].offset);
        }
        if (tok.size() > 3) {
            ch.adc_resolution = parse_number<int>(tok[3].text, tok[3].offset, "ADC resolution");
            if (ch.adc_resolution == 0) ch.adc_resolution = 12;
        }
        if (tok.size() > 4) ch.adc_zero = parse_number<int>(tok[4].text, tok[4].offset, "ADC zero");
        if (!baseline_given) ch.baseline = ch.adc_zero;
        if (tok.size() > 5) ch.initial_value = parse_number<int>(tok[5].text, tok[5].offset, "initial value");
        if (tok.size() > 6) {
            ch.checksum = parse_number<int>(tok[6].text, tok[6].offset, "checksum");
            ch.has_checksum = true;
        }
        if (tok.size() > 7) {
            const int block = parse_number<int>(tok[7].text, tok[7].offset, "block size");
            if (block != 0) {
                throw WfdbError(WfdbError::Kind::UnsupportedFormat, "wfdb header: block size must be 0",
                                tok[7].offset);
            }
        }
        if (tok.size() > 8) {
            const auto start = tok[8].offset - base;
            ch.description = std::string(line.substr(start));
            while (!ch.description.empty() && (ch.description.back() == '\r' || ch.description.back() == ' '))
                ch.description.pop_back();
        }
        if (s > 0 && ch.file_name != h.channels[0].file_name) {
            throw WfdbError(WfdbError::Kind::UnsupportedFormat, "wfdb header: all signals must share one file",
                            tok[0].offset);
        }
        h.channels.push_back(std::move(ch));
    }
    return h;
}

std::string format_wfdb_header(const WfdbHeader& h) {
    std::ostringstream os;
    char fs[64];
    std::snprintf(fs, sizeof fs, "%.17g", h.sampling_rate_hz);
    os << h.record_name << ' ' << h.channels.size() << ' ' << fs << ' ' << h.samples_per_channel << '\n';
    for (const auto& ch : h.channels) {
        char gain[64];
        std::snprintf(gain, sizeof gain, "%.17g", ch.gain);
        os << ch.file_name << ' ' << ch.format << ' ' << gain << '(' << ch.baseline << ")/" << ch.units << ' '
           << ch.adc_resolution << ' ' << ch.adc_zero << ' ' << ch.initial_value << ' ' << ch.checksum << " 0";
        if (!ch.description.empty()) os << ' ' << ch.description;
        os << '\n';
    }
    return os.str();
}

std::string pack_212(std::span<const int> samples) {
    std::string out;
    out.reserve((samples.size() + 1) / 2 * 3);
    for (std::size_t i = 0; i < samples.size(); i += 2) {
        const int s0 = samples[i];
        const int s1 = i + 1 < samples.size() ? samples[i + 1] : 0;
        for (int s : {s0, s1}) {
            if (s < -2048 || s > 2047) throw InvalidInput("pack_212: sample " + std::to_string(s) + " outside 12 bits");
        }
        const auto u0 = static_cast<unsigned>(s0) & 0xFFFu;
        const auto u1 = static_cast<unsigned>(s1) & 0xFFFu;
        out.push_back(static_cast<char>(u0 & 0xFF));
        out.push_back(static_cast<char>(((u1 >> 8) << 4) | (u0 >> 8)));
        out.push_back(static_cast<char>(u1 & 0xFF));
    }
    return out;
}

std::vector<int> unpack_212(std::string_view bytes, std::size_t count) {
    const std::size_t needed = (count + 1) / 2 * 3;
    if (bytes.size() < needed) {
        // Offset of the first sample pair that is incomplete.
        const std::size_t complete = bytes.size() / 3 * 3;
        throw WfdbError(WfdbError::Kind::TruncatedSignal,
                        "format 212 signal truncated: need " + std::to_string(needed) + " bytes for " +
                            std::to_string(count) + " samples, file has " + std::to_string(bytes.size()),
                        complete);
    }
    auto sign12 = [](unsigned v) { return (v & 0x800u) ? static_cast<int>(v) - 0x1000 : static_cast<int>(v); };
    std::vector<int> out(count);
    for (std::size_t i = 0, b = 0; i < count; i += 2, b += 3) {
        const auto b0 = static_cast<unsigned char>(bytes[b]);
        const auto b1 = static_cast<unsigned char>(bytes[b + 1]);
        const auto b2 = static_cast<unsigned char>(bytes[b + 2]);
        out[i] = sign12(b0 | ((b1 & 0x0Fu) << 8));
        if (i + 1 < count) out[i + 1] = sign12(b2 | ((b1 & 0xF0u) << 4));
    }
    return out;
}

int wfdb_checksum(std::span<const int> samples) {
    std::uint32_t sum = 0;
    for (int s : samples) sum += static_cast<std::uint32_t>(s);
    return static_cast<std::int16_t>(static_cast<std::uint16_t>(sum & 0xFFFFu));
}

WfdbRecord read_wfdb_adc(std::string_view header_text, std::string_view signal_bytes) {
    WfdbRecord rec;
    rec.header = parse_wfdb_header(header_text);
    const std::size_t nsig = rec.header.channels.size();
    std::uint64_t per_channel = rec.header.samples_per_channel;
    if (per_channel == 0) per_channel = signal_bytes.size() * 2 / 3 / nsig;
    const auto flat = unpack_212(signal_bytes, per_channel * nsig);
    rec.adc.assign(nsig, std::vector<int>(per_channel));
    for (std::size_t t = 0; t < per_channel; ++t)
        for (std::size_t c = 0; c < nsig; ++c) rec.adc[c][t] = flat[t * nsig + c];
    for (std::size_t c = 0; c < nsig; ++c) {
        const auto& ch = rec.header.channels[c];
        if (ch.has_checksum && static_cast<std::int16_t>(ch.checksum) != wfdb_checksum(rec.adc[c])) {
            throw WfdbError(WfdbError::Kind::ChecksumMismatch,
                            "format 212 signal: checksum mismatch on channel " + std::to_string(c), 0);
        }
    }
    return rec;
}

std::vector<SignalRecord> read_wfdb_record(const std::string& header_path, const std::string& signal_path) {
    const std::string header_text = read_file(header_path);
    WfdbHeader h;
    try {
        h = parse_wfdb_header(header_text);
    } catch (const WfdbError& e) {
        throw WfdbError(e.kind(), header_path + ": " + e.message(), e.offset());
    }
    std::string dat = signal_path;
    if (dat.empty()) dat = (std::filesystem::path(header_path).parent_path() / h.channels[0].file_name).string();
    WfdbRecord rec;
    try {
        rec = read_wfdb_adc(header_text, read_file(dat));
    } catch (const WfdbError& e) {
        throw WfdbError(e.kind(), dat + ": " + e.message(), e.offset());
    }
    std::vector<SignalRecord> out;
    for (std::size_t c = 0; c < rec.adc.size(); ++c) {
        const auto& ch = rec.header.channels[c];
        SignalRecord r;
        r.name = c == 0 ? h.record_name : h.record_name + "_ch" + std::to_string(c);
        r.sampling_rate_hz = h.sampling_rate_hz;
        r.samples.resize(rec.adc[c].size());
        for (std::size_t i = 0; i < r.samples.size(); ++i) r.samples[i] = (rec.adc[c][i] - ch.baseline) / ch.gain;
        out.push_back(std::move(r));
    }
    return out;
}

void write_wfdb_record(const std::string& dir, const std::string& name, double fs,
                       const std::vector<std::vector<int>>& adc, double gain, int baseline) {
    if (adc.empty()) throw InvalidInput("write_wfdb_record: no channels");
    const std::size_t n = adc[0].size();
    for (const auto& ch : adc) {
        if (ch.size() != n) throw InvalidInput("write_wfdb_record: channels differ in length");
    }
    WfdbHeader h;
    h.record_name = name;
    h.sampling_rate_hz = fs;
    h.samples_per_channel = n;
    std::vector<int> flat(n * adc.size());
    for (std::size_t c = 0; c < adc.size(); ++c) {
        WfdbChannel ch;
        ch.file_name = name + ".dat";
        ch.gain = gain;
        ch.baseline = baseline;
        ch.adc_zero = baseline;
        ch.initial_value = n > 0 ? adc[c][0] : 0;
        ch.checksum = wfdb_checksum(adc[c]);
        ch.has_checksum = true;
        ch.description = "ch" + std::to_string(c);
        h.channels.push_back(ch);
        for (std::size_t t = 0; t < n; ++t) flat[t * adc.size() + c] = adc[c][t];
    }
    const std::filesystem::path base(dir);
    write_file((base / (name + ".hea")).string(), format_wfdb_header(h));
    write_file((base / (name + ".dat")).string(), pack_212(flat));
}

void write_wfdb_physical(const std::string& dir, const std::string& name, double fs,
                         const std::vector<std::vector<double>>& channels, double gain, int baseline) {
    std::vector<std::vector<int>> adc;
    for (const auto& ch : channels) {
        std::vector<int> q(ch.size());
        for (std::size_t i = 0; i < ch.size(); ++i) {
            const double v = std::round(ch[i] * gain) + baseline;
            q[i] = static_cast<int>(std::clamp(v, -2048.0, 2047.0));
        }
        adc.push_back(std::move(q));
    }
    write_wfdb_record(dir, name, fs, adc, gain, baseline);
}

SignalRecord parse_csv_signal(std::string_view text, const std::string& name, double default_fs) {
    SignalRecord r;
    r.name = name;
    r.sampling_rate_hz = default_fs;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        const std::uint64_t line_offset = pos;
        pos = end + 1;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
        while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
        if (line.empty()) continue;
        if (line.front() == '#') {
            line.remove_prefix(1);
            while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
            if (line.starts_with("fs=")) {
                const auto v = line.substr(3);
                double fs = 0.0;
                const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), fs);
                if (ec != std::errc() || ptr != v.data() + v.size() || !(fs > 0.0)) {
                    throw ParseError("csv signal " + name + ": bad fs '" + std::string(v) + "'", line_offset);
                }
                r.sampling_rate_hz = fs;
            }
            continue;
        }
        // Only the first column is used when a row has several.
        const auto comma = line.find(',');
        const auto cell = line.substr(0, comma);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
            throw ParseError("csv signal " + name + ": bad sample '" + std::string(cell) + "'", line_offset);
        }
        r.samples.push_back(v);
    }
    if (r.samples.empty()) throw ParseError("csv signal " + name + ": no samples", text.size());
    return r;
}

std::string format_csv_signal(const SignalRecord& record) {
    std::string out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "# fs=%.17g\n", record.sampling_rate_hz);
    out += buf;
    for (double v : record.samples) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        out += buf;
    }
    return out;
}

namespace {
constexpr std::string_view kRawMagic = "WSIG";
constexpr std::uint32_t kRawVersion = 1;
}  // namespace

SignalRecord parse_raw_signal(std::string_view bytes, const std::string& name) {
    ByteReader in(bytes, "raw signal " + name);
    if (in.bytes(4) != kRawMagic) throw ParseError("raw signal " + name + ": bad magic", 0);
    const auto version_offset = in.offset();
    if (in.u32() != kRawVersion) throw ParseError("raw signal " + name + ": unsupported version", version_offset);
    SignalRecord r;
    r.name = name;
    r.sampling_rate_hz = in.f32();
    if (!(r.sampling_rate_hz > 0.0)) in.fail("sampling rate must be positive");
    const std::uint32_t n = in.u32();
    r.samples.resize(n);
    for (auto& v : r.samples) v = in.f32();
    if (!in.at_end()) in.fail("trailing bytes after " + std::to_string(n) + " samples");
    return r;
}

std::string format_raw_signal(const SignalRecord& record) {
    ByteWriter out;
    out.bytes(kRawMagic);
    out.u32(kRawVersion);
    out.f32(static_cast<float>(record.sampling_rate_hz));
    out.u32(static_cast<std::uint32_t>(record.samples.size()));
    for (double v : record.samples) out.f32(static_cast<float>(v));
    return out.take();
}

SignalFormat format_from_path(const std::string& path) {
    const auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".hea") return SignalFormat::Wfdb;
    if (ext == ".csv" || ext == ".txt") return SignalFormat::Csv;
    return SignalFormat::Raw;
}

SignalRecord load_signal(const std::string& path) {
    const auto stem = std::filesystem::path(path).stem().string();
    switch (format_from_path(path)) {
        case SignalFormat::Wfdb:
            return read_wfdb_record(path).front();
        case SignalFormat::Csv:
            try {
                return parse_csv_signal(read_file(path), stem);
            } catch (const ParseError& e) {
                throw ParseError(path + ": " + e.message(), e.offset());
            }
        case SignalFormat::Raw:
            break;
    }
    try {
        return parse_raw_signal(read_file(path), stem);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.message(), e.offset());
    }
}

void save_signal(const std::string& path, const SignalRecord& record) {
    switch (format_from_path(path)) {
        case SignalFormat::Wfdb:
            throw InvalidInput("save_signal: write WFDB records with write_wfdb_record (" + path + ")");
        case SignalFormat::Csv:
            write_file(path, format_csv_signal(record));
            return;
        case SignalFormat::Raw:
            write_file(path, format_raw_signal(record));
            return;
    }
}

}  // namespace wcae::io
