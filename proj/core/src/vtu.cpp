#include "hmfem/vtu.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <regex>
#include <sstream>
#include <vector>

#include "hmfem/error.hpp"
#include "hmfem/examples.hpp"

namespace hmfem {

namespace {

constexpr int kVtkTriangle = 5;
constexpr int kVtkTetra = 10;

std::string attribute(const std::string& tag, const std::string& name) {
  const std::regex re(name + "=\"([^\"]*)\"");
  std::smatch m;
  return std::regex_search(tag, m, re) ? m[1].str() : std::string{};
}

}  // namespace

void write_vtu(std::ostream& out, const SaddleState& state) {
  const SimplicialMesh& mesh = state.u.mesh();
  const FeFunction lambda = reported_multiplier(state);
  const int d = mesh.dim();
  const int m = state.u.components();
  const std::size_t nv = mesh.num_vertices();
  const std::size_t ns = mesh.num_simplices();
  const int nper = mesh.vertices_per_simplex();

  const auto old_precision = out.precision(17);
  out << "<?xml version=\"1.0\"?>\n"
      << "<VTKFile type=\"UnstructuredGrid\" version=\"0.1\" byte_order=\"LittleEndian\">\n"
      << "<UnstructuredGrid>\n"
      << "<Piece NumberOfPoints=\"" << nv << "\" NumberOfCells=\"" << ns << "\">\n";

  out << "<PointData Vectors=\"u\" Scalars=\"lambda\">\n"
      << "<DataArray type=\"Float64\" Name=\"u\" NumberOfComponents=\"" << m << "\" format=\"ascii\">\n";
  for (std::size_t z = 0; z < nv; ++z) {
    for (int i = 0; i < m; ++i) out << (i ? " " : "") << state.u(z, i);
    out << '\n';
  }
  out << "</DataArray>\n"
      << "<DataArray type=\"Float64\" Name=\"lambda\" NumberOfComponents=\"1\" format=\"ascii\">\n";
  for (std::size_t z = 0; z < nv; ++z) out << lambda(z) << '\n';
  out << "</DataArray>\n</PointData>\n";

  out << "<Points>\n<DataArray type=\"Float64\" NumberOfComponents=\"3\" format=\"ascii\">\n";
  for (std::size_t z = 0; z < nv; ++z) {
    const auto x = mesh.vertex(z);
    out << x[0] << ' ' << x[1] << ' ' << (d == 3 ? x[2] : 0.0) << '\n';
  }
  out << "</DataArray>\n</Points>\n";

  out << "<Cells>\n<DataArray type=\"Int32\" Name=\"connectivity\" format=\"ascii\">\n";
  for (std::size_t t = 0; t < ns; ++t) {
    const auto s = mesh.simplex(t);
    for (int k = 0; k < nper; ++k) out << (k ? " " : "") << s[k];
    out << '\n';
  }
  out << "</DataArray>\n<DataArray type=\"Int32\" Name=\"offsets\" format=\"ascii\">\n";
  for (std::size_t t = 0; t < ns; ++t) out << (t + 1) * static_cast<std::size_t>(nper) << '\n';
  out << "</DataArray>\n<DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n";
  for (std::size_t t = 0; t < ns; ++t) out << (d == 2 ? kVtkTriangle : kVtkTetra) << '\n';
  out << "</DataArray>\n</Cells>\n</Piece>\n</UnstructuredGrid>\n</VTKFile>\n";
  out.precision(old_precision);
}

void export_vtu(const SaddleState& state, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_vtu(out, state);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

VtuSummary read_vtu_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  VtuSummary summary;
  bool in_point_data = false;
  bool have_piece = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("<Piece", 0) == 0) {
      summary.n_points = std::stoul(attribute(line, "NumberOfPoints"));
      summary.n_cells = std::stoul(attribute(line, "NumberOfCells"));
      have_piece = true;
    } else if (line.rfind("<PointData", 0) == 0) {
      in_point_data = true;
    } else if (line.rfind("</PointData", 0) == 0) {
      in_point_data = false;
    } else if (in_point_data && line.rfind("<DataArray", 0) == 0) {
      const std::string name = attribute(line, "Name");
      const int components = std::stoi(attribute(line, "NumberOfComponents"));
      std::size_t count = 0;
      std::vector<double> row;
      while (std::getline(in, line) && line.rfind("</DataArray", 0) != 0) {
        std::istringstream values(line);
        row.clear();
        double v;
        while (values >> v) row.push_back(v);
        count += row.size();
        if (name == "u") {
          double norm2 = 0;
          for (double x : row) norm2 += x * x;
          summary.max_unit_defect = std::max(summary.max_unit_defect, std::abs(std::sqrt(norm2) - 1.0));
        }
      }
      summary.point_arrays[name] = {components, count / static_cast<std::size_t>(std::max(components, 1))};
    }
  }
  if (!have_piece) throw IoError(path.string() + " is not an unstructured grid file");
  return summary;
}

}  // namespace hmfem
