#include "atx/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "atx/error.hpp"

namespace atx {

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

// Sequential white -> dark blue ramp.
std::string ramp_color(double v) {
  v = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
  constexpr double lo[3] = {247, 251, 255};
  constexpr double hi[3] = {8, 48, 107};
  std::ostringstream os;
  os << "rgb(";
  for (int k = 0; k < 3; ++k) {
    os << static_cast<int>(std::lround(lo[k] + (hi[k] - lo[k]) * v)) << (k < 2 ? "," : ")");
  }
  return os.str();
}

std::string text_color(double v) { return v > 0.55 ? "#ffffff" : "#000000"; }

std::string short_label(ClassId id) { return std::to_string(id) + " " + class_name(id); }

struct GridCell {
  std::string text;
  double shade = 0.0;  // in [0, 1]
  bool placeholder = false;
};

// Square heatmap with row/column labels. Rows are the first index.
std::string grid_svg(const std::string& title, const std::string& row_axis, const std::string& col_axis,
                     const std::vector<std::string>& labels, const std::vector<std::vector<GridCell>>& cells) {
  const int n = static_cast<int>(labels.size());
  const int cell = 44, left = 190, top = 70;
  const int width = left + n * cell + 30;
  const int height = top + n * cell + 180;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"Helvetica,Arial,sans-serif\">\n";
  s << "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
       "patternTransform=\"rotate(45)\"><rect width=\"6\" height=\"6\" fill=\"#d9d9d9\"/>"
       "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#969696\" stroke-width=\"2\"/></pattern></defs>\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  s << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
    << "</text>\n";
  s << "<text x=\"" << left + n * cell / 2 << "\" y=\"" << top + n * cell + 170
    << "\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(col_axis) << "</text>\n";
  s << "<text x=\"14\" y=\"" << top + n * cell / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
    << top + n * cell / 2 << ")\">" << xml_escape(row_axis) << "</text>\n";
  for (int r = 0; r < n; ++r) {
    s << "<text x=\"" << left - 6 << "\" y=\"" << top + r * cell + cell / 2 + 4
      << "\" text-anchor=\"end\" font-size=\"11\">" << xml_escape(labels[static_cast<std::size_t>(r)]) << "</text>\n";
    const int cx = left + r * cell + cell / 2, cy = top + n * cell + 8;
    s << "<text x=\"" << cx << "\" y=\"" << cy << "\" text-anchor=\"end\" font-size=\"11\" transform=\"rotate(-60 " << cx
      << " " << cy << ")\">" << xml_escape(labels[static_cast<std::size_t>(r)]) << "</text>\n";
  }
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const auto& g = cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      const int x = left + c * cell, y = top + r * cell;
      const std::string fill = g.placeholder ? "url(#hatch)" : ramp_color(g.shade);
      s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
        << fill << "\" stroke=\"#ffffff\"/>\n";
      if (!g.text.empty()) {
        s << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
          << "\" text-anchor=\"middle\" font-size=\"10\" fill=\"" << (g.placeholder ? "#525252" : text_color(g.shade))
          << "\">" << xml_escape(g.text) << "</text>\n";
      }
    }
  }
  s << "</svg>\n";
  return s.str();
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw data_error("malformed " + std::string(what) + " '" + std::string(text) + "' in transfer table");
  }
  return v;
}

constexpr std::string_view kTransferHeader =
    "train_attack,test_attack,mode,transform,window_n,status,attack_recall,benign_recall,train_benign,"
    "train_attack_count,test_benign,test_attack_count,seed,error";

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else if (c == '\n' || c == '\r') out += ' ';
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back().push_back(c);
    }
  }
  return out;
}

void ResultLayout::create() const {
  for (const auto& d : {matrices(), confusion(), rfe(), figures()}) std::filesystem::create_directories(d);
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw data_error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> confusion_percentages(const EvalResult& result) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < result.confusion.size(); ++r) {
    std::vector<double> row(result.confusion[r].size(), 0.0);
    if (result.support[r] > 0) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        row[c] = 100.0 * static_cast<double>(result.confusion[r][c]) / static_cast<double>(result.support[r]);
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

Artifacts emit_confusion(const ResultLayout& out, const std::string& name, const EvalResult& result, bool normalize) {
  const auto pct = confusion_percentages(result);
  const auto n = static_cast<std::size_t>(result.classes);
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < n; ++c) {
    labels.push_back(n == 2 ? (c == 0 ? "0 benign" : "1 attack") : short_label(static_cast<ClassId>(c)));
  }

  std::ostringstream csv;
  csv << "true_class";
  for (std::size_t c = 0; c < n; ++c) csv << ",pred_" << c;
  csv << ",support,recall\n";
  for (std::size_t r = 0; r < n; ++r) {
    csv << r;
    for (std::size_t c = 0; c < n; ++c) {
      csv << ',' << (normalize ? format_double(pct[r][c]) : std::to_string(result.confusion[r][c]));
    }
    csv << ',' << result.support[r] << ',' << format_double(result.recall[r]) << '\n';
  }

  std::vector<std::vector<GridCell>> grid(n, std::vector<GridCell>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      auto& g = grid[r][c];
      g.shade = pct[r][c] / 100.0;
      if (result.support[r] == 0) g.text = "";
      else if (normalize) g.text = fixed(pct[r][c], 1);
      else g.text = std::to_string(result.confusion[r][c]);
    }
  }
  const std::string title = normalize ? "Confusion matrix (% of true class)" : "Confusion matrix (counts)";
  const auto table_path = out.confusion() / (name + ".csv");
  const auto svg_path = out.figures() / ("confusion_" + name + ".svg");
  write_text(table_path, csv.str());
  write_text(svg_path, grid_svg(title, "true class", "predicted class", labels, grid));
  return {table_path, svg_path};
}

std::string regime_name(AugmentMode mode, const TransformSpec& transform) {
  std::string name = std::string(augment_label(mode)) + "_" + transform.label();
  if (transform.kind == TransformKind::kTemporalAverage) name += std::to_string(transform.window_n);
  return name;
}

namespace {

// Tables are read back line by line, so messages must stay on one line.
std::string one_line(std::string text) {
  std::replace_if(text.begin(), text.end(), [](char ch) { return ch == '\n' || ch == '\r'; }, ' ');
  return text;
}

}  // namespace

std::string transfer_table(const TransferMatrix& matrix) {
  std::ostringstream s;
  s << kTransferHeader << '\n';
  for (const auto& c : matrix.cells) {
    s << c.train_attack << ',' << c.test_attack << ',' << augment_label(c.mode) << ',' << c.transform.label() << ','
      << c.transform.window_n << ',' << cell_status_label(c.status) << ',' << format_double(c.attack_recall) << ','
      << format_double(c.benign_recall) << ',' << c.train_benign << ',' << c.train_attack_count << ','
      << c.test_benign << ',' << c.test_attack_count << ',' << c.seed << ',' << csv_escape(one_line(c.error)) << '\n';
  }
  return s.str();
}

TransferMatrix parse_transfer_table(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kTransferHeader) throw data_error("transfer table: unexpected header");
  TransferMatrix m;
  std::vector<ClassId> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv_split(line);
    if (f.size() != 14) throw data_error("transfer table: expected 14 fields, got " + std::to_string(f.size()));
    TransferCellResult c;
    c.train_attack = parse_number<int>(f[0], "train_attack");
    c.test_attack = parse_number<int>(f[1], "test_attack");
    c.mode = parse_augment_mode(f[2]);
    c.transform.kind = parse_transform_kind(f[3]);
    c.transform.window_n = parse_number<int>(f[4], "window_n");
    c.status = parse_cell_status(f[5]);
    c.attack_recall = parse_number<double>(f[6], "attack_recall");
    c.benign_recall = parse_number<double>(f[7], "benign_recall");
    c.train_benign = parse_number<std::size_t>(f[8], "train_benign");
    c.train_attack_count = parse_number<std::size_t>(f[9], "train_attack_count");
    c.test_benign = parse_number<std::size_t>(f[10], "test_benign");
    c.test_attack_count = parse_number<std::size_t>(f[11], "test_attack_count");
    c.seed = parse_number<std::uint64_t>(f[12], "seed");
    c.error = f[13];
    if (std::find(m.attacks.begin(), m.attacks.end(), c.train_attack) == m.attacks.end()) {
      m.attacks.push_back(c.train_attack);
    }
    m.cells.push_back(std::move(c));
  }
  if (m.cells.empty()) throw data_error("transfer table: no cells");
  if (m.cells.size() != m.attacks.size() * m.attacks.size()) throw data_error("transfer table: matrix is not square");
  for (std::size_t r = 0; r < m.attacks.size(); ++r) {
    for (std::size_t c = 0; c < m.attacks.size(); ++c) {
      const auto& cell = m.at(r, c);
      if (cell.train_attack != m.attacks[r] || cell.test_attack != m.attacks[c]) {
        throw data_error("transfer table: cells are not in row-major attack order");
      }
    }
  }
  m.mode = m.cells.front().mode;
  m.transform = m.cells.front().transform;
  return m;
}

TransferMatrix read_transfer_table(const std::filesystem::path& path) { return parse_transfer_table(read_text(path)); }

std::string transfer_heatmap_svg(const TransferMatrix& matrix) {
  const std::size_t n = matrix.attacks.size();
  std::vector<std::string> labels;
  for (auto a : matrix.attacks) labels.push_back(short_label(a));
  std::vector<std::vector<GridCell>> grid(n, std::vector<GridCell>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const auto& cell = matrix.at(r, c);
      auto& g = grid[r][c];
      switch (cell.status) {
        case CellStatus::kOk:
          g.shade = cell.attack_recall;
          g.text = fixed(cell.attack_recall, 2);
          break;
        case CellStatus::kPlaceholder:
          g.placeholder = true;
          g.text = "n/a";
          break;
        case CellStatus::kFailed:
          g.placeholder = true;
          g.text = "fail";
          break;
        case CellStatus::kNotRun:
          g.placeholder = true;
          break;
      }
    }
  }
  const std::string title = "Attack recall, " + std::string(augment_label(matrix.mode)) + " training, transform " +
                            matrix.transform.label();
  return grid_svg(title, "training attack", "testing attack", labels, grid);
}

Artifacts emit_transfer_heatmap(const ResultLayout& out, const TransferMatrix& matrix) {
  const auto stem = regime_name(matrix.mode, matrix.transform);
  const auto table_path = out.matrices() / ("transfer_" + stem + ".csv");
  const auto svg_path = out.figures() / ("transfer_" + stem + ".svg");
  write_text(table_path, transfer_table(matrix));
  write_text(svg_path, transfer_heatmap_svg(matrix));
  return {table_path, svg_path};
}

std::string relations_table(const std::vector<TransferRelation>& relations, const TransferMatrix& matrix) {
  std::map<ClassId, std::vector<std::pair<ClassId, bool>>> rows;  // from -> (to, symmetric)
  for (const auto& rel : relations) {
    const bool sym = rel.direction == Direction::kBoth;
    if (rel.transfers(rel.first, rel.second)) rows[rel.first].push_back({rel.second, sym});
    if (rel.transfers(rel.second, rel.first)) rows[rel.second].push_back({rel.first, sym});
  }
  std::ostringstream s;
  s << "train_attack,train_name,transfers_to,relation_kinds,attack_recalls\n";
  for (auto& [from, targets] : rows) {
    std::sort(targets.begin(), targets.end());
    std::vector<std::string> to, kinds, recalls;
    for (const auto& [t, sym] : targets) {
      to.push_back(std::to_string(t));
      kinds.push_back(sym ? "sym" : "asym");
      const auto* cell = matrix.find(from, t);
      recalls.push_back(cell ? format_double(cell->attack_recall) : "");
    }
    s << from << ',' << csv_escape(class_name(from)) << ',' << join(to, ";") << ',' << join(kinds, ";") << ','
      << join(recalls, ";") << '\n';
  }
  return s.str();
}

Artifacts emit_relations(const ResultLayout& out, const std::vector<TransferRelation>& relations,
                         const TransferMatrix& matrix) {
  const auto path = out.matrices() / ("relations_" + regime_name(matrix.mode, matrix.transform) + ".csv");
  write_text(path, relations_table(relations, matrix));
  return {path};
}

Artifacts emit_comparison(const ResultLayout& out, const std::vector<std::pair<ClassId, ClassId>>& pairs,
                          const std::vector<TransferMatrix>& matrices) {
  std::ostringstream csv;
  csv << "train_attack,test_attack,regime,status,attack_recall\n";
  std::vector<std::vector<double>> values(pairs.size(), std::vector<double>(matrices.size(), 0.0));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (std::size_t m = 0; m < matrices.size(); ++m) {
      const auto* cell = matrices[m].find(pairs[p].first, pairs[p].second);
      const auto status = cell ? cell->status : CellStatus::kNotRun;
      const double v = cell && status == CellStatus::kOk ? cell->attack_recall : 0.0;
      values[p][m] = v;
      csv << pairs[p].first << ',' << pairs[p].second << ',' << regime_name(matrices[m].mode, matrices[m].transform)
          << ',' << cell_status_label(status) << ',' << format_double(v) << '\n';
    }
  }

  static constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                             "#66a61e", "#e6ab02", "#a6761d", "#666666"};
  const int bar = 14, gap = 18, left = 60, top = 50, plot_h = 240;
  const int group_w = static_cast<int>(matrices.size()) * bar + gap;
  const int width = left + std::max(1, static_cast<int>(pairs.size())) * group_w + 200;
  const int height = top + plot_h + 60;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"Helvetica,Arial,sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  s << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << "Attack recall on selected training/testing pairs</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const int y = top + plot_h - t * plot_h / 4;
    s << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << width - 200 << "\" y2=\"" << y
      << "\" stroke=\"#e0e0e0\"/>\n<text x=\"" << left - 6 << "\" y=\"" << y + 4
      << "\" text-anchor=\"end\" font-size=\"10\">" << fixed(t * 0.25, 2) << "</text>\n";
  }
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const int gx = left + static_cast<int>(p) * group_w + gap / 2;
    for (std::size_t m = 0; m < matrices.size(); ++m) {
      const int h = static_cast<int>(std::lround(values[p][m] * plot_h));
      s << "<rect x=\"" << gx + static_cast<int>(m) * bar << "\" y=\"" << top + plot_h - h << "\" width=\"" << bar
        << "\" height=\"" << h << "\" fill=\"" << kPalette[m % 8] << "\"/>\n";
    }
    s << "<text x=\"" << gx + static_cast<int>(matrices.size()) * bar / 2 << "\" y=\"" << top + plot_h + 16
      << "\" text-anchor=\"middle\" font-size=\"11\">(" << pairs[p].first << "," << pairs[p].second << ")</text>\n";
  }
  for (std::size_t m = 0; m < matrices.size(); ++m) {
    const int ly = top + static_cast<int>(m) * 18;
    s << "<rect x=\"" << width - 185 << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[m % 8]
      << "\"/>\n<text x=\"" << width - 168 << "\" y=\"" << ly + 10 << "\" font-size=\"11\">"
      << xml_escape(regime_name(matrices[m].mode, matrices[m].transform)) << "</text>\n";
  }
  s << "</svg>\n";

  const auto table_path = out.matrices() / "comparison.csv";
  const auto svg_path = out.figures() / "comparison.svg";
  write_text(table_path, csv.str());
  write_text(svg_path, s.str());
  return {table_path, svg_path};
}

std::string ranking_table(const FeatureRanking& ranking) {
  std::ostringstream s;
  s << "feature_index,feature_name,elimination_round,selected,importance\n";
  for (const auto& e : ranking.elimination) {
    s << e.index << ',' << csv_escape(e.name) << ',' << e.round << ',' << (ranking.is_selected(e.index) ? 1 : 0) << ','
      << format_double(e.importance) << '\n';
  }
  return s.str();
}

std::string ranking_scores_table(const FeatureRanking& ranking) {
  std::ostringstream s;
  s << "retained_features,validation_f1\n";
  for (const auto& sc : ranking.scores) s << sc.size << ',' << format_double(sc.score) << '\n';
  return s.str();
}

Artifacts emit_rfe(const ResultLayout& out, const std::vector<NamedRanking>& rankings) {
  Artifacts produced;
  std::ostringstream summary;
  summary << "name,attacks,selected_count,best_f1,selected_f1,selected_features\n";
  std::map<ClassId, const FeatureRanking*> singles;
  for (const auto& nr : rankings) {
    const auto table = out.rfe() / (nr.name + "_ranking.csv");
    const auto scores = out.rfe() / (nr.name + "_scores.csv");
    write_text(table, ranking_table(nr.ranking));
    write_text(scores, ranking_scores_table(nr.ranking));
    produced.push_back(table);
    produced.push_back(scores);

    std::vector<std::string> ids, names;
    for (auto a : nr.ranking.attacks) ids.push_back(std::to_string(a));
    for (auto f : nr.ranking.selected) names.emplace_back(feature_names()[f]);
    summary << csv_escape(nr.name) << ",(" << join(ids, ";") << ")," << nr.ranking.selected.size() << ','
            << format_double(nr.ranking.best_score) << ',' << format_double(nr.ranking.selected_score) << ','
            << csv_escape(join(names, ";")) << '\n';
    if (nr.ranking.attacks.size() == 1) singles[nr.ranking.attacks.front()] = &nr.ranking;
  }
  const auto summary_path = out.rfe() / "summary.csv";
  write_text(summary_path, summary.str());
  produced.push_back(summary_path);

  std::ostringstream common;
  common << "name,attack_a,attack_b,common_count,overlap_ratio,common_features\n";
  for (const auto& nr : rankings) {
    if (nr.ranking.attacks.size() != 2) continue;
    const auto a = nr.ranking.attacks[0], b = nr.ranking.attacks[1];
    if (!singles.contains(a) || !singles.contains(b)) continue;
    const auto overlap = common_features(*singles[a], *singles[b]);
    std::vector<std::string> names;
    for (auto f : overlap.common) names.emplace_back(feature_names()[f]);
    common << csv_escape(nr.name) << ',' << a << ',' << b << ',' << overlap.common.size() << ','
           << format_double(overlap.ratio) << ',' << csv_escape(join(names, ";")) << '\n';
  }
  const auto common_path = out.rfe() / "common_features.csv";
  write_text(common_path, common.str());
  produced.push_back(common_path);
  return produced;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw runtime_error("SHA-256 digest failed");
  }
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return s.str();
}

std::string dataset_hash(const RecordSet& records) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw runtime_error("SHA-256 init failed");
  }
  for (const auto& r : records) {
    EVP_DigestUpdate(ctx, r.features.data(), sizeof(double) * kFeatureCount);
    const auto label = static_cast<std::int32_t>(r.label);
    EVP_DigestUpdate(ctx, &label, sizeof label);
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return s.str();
}

nlohmann::json RunManifest::to_json(const std::filesystem::path& root) const {
  nlohmann::json j;
  j["tool_version"] = tool_version;
  j["config"] = config;
  j["config_sha256"] = sha256_hex(config.dump());
  j["dataset"] = {{"rows", dataset_rows}, {"sha256", dataset_hash}};
  j["seeds"] = seeds;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  std::vector<std::string> paths;
  for (const auto& p : artifacts) paths.push_back(std::filesystem::relative(p, root).generic_string());
  j["artifacts"] = paths;
  j["warnings"] = warnings;
  j["failures"] = failures;
  return j;
}

void write_manifest(const ResultLayout& out, const RunManifest& manifest) {
  nlohmann::json doc = nlohmann::json::object();
  if (std::filesystem::exists(out.manifest())) {
    doc = nlohmann::json::parse(read_text(out.manifest()), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) doc = nlohmann::json::object();
  }
  doc["run_root"] = out.root.generic_string();
  doc["commands"][manifest.command.empty() ? "run" : manifest.command] = manifest.to_json(out.root);
  write_text(out.manifest(), doc.dump(2) + "\n");
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace atx
