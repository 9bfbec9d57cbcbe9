#pragma once

// Text formats for fields and kicks plus small file helpers.
//
//   KICKFLOW-FIELD v1,K=<K>
//   c_0,c_1,...,c_{K-1}
//
//   KICKFLOW-KICK v1,P=<P>,K=<K>
//   one row of K coefficients per time order p
//
// Numbers use the shortest text that reads back to the same double.

#include <cstdint>
#include <string>
#include <span>
#include <string_view>
#include <vector>

#include "kickflow/kick_noise.hpp"
#include "kickflow/spectral_basis.hpp"

namespace kickflow {

std::string format_field(const SpectralField& u);
SpectralField parse_field(std::string_view text);

// Several fields under one header, one row each (ensemble files).
std::string format_fields(std::span<const SpectralField> fields);
std::vector<SpectralField> parse_fields(std::string_view text);

std::string format_kick(const KickPath& eta);
KickPath parse_kick(std::string_view text);

void write_field(const std::string& path, const SpectralField& u);
SpectralField read_field(const std::string& path);
std::vector<SpectralField> read_fields(const std::string& path);

void write_kick(const std::string& path, const KickPath& eta);
KickPath read_kick(const std::string& path);

// Whole-file helpers; throw io-error.
std::string read_text(const std::string& path);
void write_text(const std::string& path, std::string_view content);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);

// Shortest round-trip text for a double.
std::string format_real(double x);

}  // namespace kickflow
