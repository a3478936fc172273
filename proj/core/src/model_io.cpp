#include "textwalk/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "textwalk/atomic_file.hpp"
#include "textwalk/error.hpp"

namespace textwalk {

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'T', 'X', 'W', 'K'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error(ErrorCode::BadModelFile, "truncated file");
  }
  return value;
}

bool has_forward_cell(EncoderKind k) { return k == EncoderKind::Gru || k == EncoderKind::BiGruMaxRes; }
bool has_backward_cell(EncoderKind k) { return k == EncoderKind::BiGruMaxRes; }

void put_matrix(std::ostream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.flat().data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix get_matrix(std::istream& in, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  if (!in.read(reinterpret_cast<char*>(m.flat().data()),
               static_cast<std::streamsize>(m.size() * sizeof(double)))) {
    throw Error(ErrorCode::BadModelFile, "truncated matrix block");
  }
  return m;
}

void put_cell(std::ostream& out, const GruCellParams& cell) {
  for (const Matrix* m : cell.tensors()) put_matrix(out, *m);
}

GruCellParams get_cell(std::istream& in, std::size_t dim) {
  GruCellParams cell = GruCellParams::zeros(dim);
  for (Matrix* m : cell.tensors()) *m = get_matrix(in, m->rows(), m->cols());
  return cell;
}

}  // namespace

void write_model(const EncoderModel& model, std::ostream& out) {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kModelFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.kind));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.dim));
  put<std::uint64_t>(out, model.vocabulary.size());
  for (const auto& word : model.vocabulary) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(word.size()));
    out.write(word.data(), static_cast<std::streamsize>(word.size()));
  }
  for (const EncoderSide* side : {&model.focus, &model.context}) {
    put_matrix(out, side->table);
    if (has_forward_cell(model.kind)) put_cell(out, side->forward);
    if (has_backward_cell(model.kind)) put_cell(out, side->backward);
  }
  if (!out) throw Error(ErrorCode::Io, "model write failed");
}

EncoderModel read_model(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorCode::BadModelFile, "bad magic");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::BadModelFile, "unsupported version " + std::to_string(version));
  }
  const auto kind_tag = get<std::uint32_t>(in);
  if (kind_tag > static_cast<std::uint32_t>(EncoderKind::BiGruMaxRes)) {
    throw Error(ErrorCode::BadModelFile, "unknown encoder tag " + std::to_string(kind_tag));
  }
  EncoderModel model;
  model.kind = static_cast<EncoderKind>(kind_tag);
  model.dim = get<std::uint32_t>(in);
  const auto rows = get<std::uint64_t>(in);
  if (model.dim == 0) throw Error(ErrorCode::BadModelFile, "zero dimension");
  model.vocabulary.reserve(rows);
  for (std::uint64_t i = 0; i < rows; ++i) {
    const auto len = get<std::uint32_t>(in);
    std::string word(len, '\0');
    if (!in.read(word.data(), len)) throw Error(ErrorCode::BadModelFile, "truncated vocabulary");
    model.vocabulary.push_back(std::move(word));
  }
  for (EncoderSide* side : {&model.focus, &model.context}) {
    side->table = get_matrix(in, rows, model.dim);
    if (has_forward_cell(model.kind)) side->forward = get_cell(in, model.dim);
    if (has_backward_cell(model.kind)) side->backward = get_cell(in, model.dim);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::BadModelFile, "trailing bytes");
  }
  return model;
}

void save_model(const EncoderModel& model, const std::filesystem::path& path) {
  write_atomically(path, [&model](std::ostream& out) { write_model(model, out); });
}

EncoderModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_model(in);
}

}  // namespace textwalk
