#include "izsfd/schema.hpp"

#include "izsfd/error.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace izsfd {

AttributeSchema::AttributeSchema(std::vector<Eigen::Index> cardinalities)
    : cardinalities_(std::move(cardinalities)) {
    if (cardinalities_.empty()) throw SchemaMismatch("schema needs at least one attribute");
    for (auto a : cardinalities_) {
        if (a < 2) throw SchemaMismatch("every attribute needs at least two values");
        offsets_.push_back(width_);
        width_ += a;
    }
}

AttributeSchema AttributeSchema::select(std::span<const std::size_t> groups) const {
    std::vector<Eigen::Index> c;
    for (auto g : groups) {
        if (g >= cardinalities_.size()) throw SchemaMismatch("group index out of range");
        c.push_back(cardinalities_[g]);
    }
    return AttributeSchema(std::move(c));
}

RowVector encode_attributes(std::span<const int> raw, const AttributeSchema& schema) {
    if (raw.size() != schema.group_count())
        throw InvalidAttribute("expected " + std::to_string(schema.group_count()) + " attribute values, got " +
                               std::to_string(raw.size()));
    RowVector out = RowVector::Zero(schema.coded_width());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] < 0 || raw[i] >= schema.cardinality(i))
            throw InvalidAttribute("attribute " + std::to_string(i) + " value " + std::to_string(raw[i]) +
                                   " outside [0, " + std::to_string(schema.cardinality(i)) + ")");
        out(schema.offset(i) + raw[i]) = 1.0;
    }
    return out;
}

bool is_valid_coding(const RowVector& row, const AttributeSchema& schema) {
    if (row.size() != schema.coded_width()) return false;
    for (std::size_t g = 0; g < schema.group_count(); ++g) {
        int ones = 0;
        for (Eigen::Index j = 0; j < schema.cardinality(g); ++j) {
            const double v = row(schema.offset(g) + j);
            if (v == 1.0) ++ones;
            else if (v != 0.0) return false;
        }
        if (ones != 1) return false;
    }
    return true;
}

std::vector<int> decode_attributes(const RowVector& coded, const AttributeSchema& schema) {
    if (!is_valid_coding(coded, schema)) throw InvalidAttribute("row is not a per-group one-hot coding");
    std::vector<int> raw(schema.group_count());
    for (std::size_t g = 0; g < schema.group_count(); ++g) {
        Eigen::Index at = 0;
        coded.segment(schema.offset(g), schema.cardinality(g)).maxCoeff(&at);
        raw[g] = static_cast<int>(at);
    }
    return raw;
}

FaultAttributeMatrix::FaultAttributeMatrix(AttributeSchema schema, std::vector<CategoryId> ids, Matrix rows,
                                           bool distinct_rows)
    : schema_(std::move(schema)), ids_(std::move(ids)), rows_(std::move(rows)) {
    if (rows_.rows() != static_cast<Eigen::Index>(ids_.size()))
        throw SchemaMismatch("attribute matrix has " + std::to_string(rows_.rows()) + " rows for " +
                             std::to_string(ids_.size()) + " categories");
    if (rows_.cols() != schema_.coded_width())
        throw SchemaMismatch("attribute matrix width " + std::to_string(rows_.cols()) +
                             " does not match coded width " + std::to_string(schema_.coded_width()));
    std::set<CategoryId> seen_ids;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!seen_ids.insert(ids_[i]).second)
            throw InvalidInput("duplicate category id " + std::to_string(ids_[i]));
        if (!is_valid_coding(rows_.row(static_cast<Eigen::Index>(i)), schema_))
            throw InvalidAttribute("row for category " + std::to_string(ids_[i]) + " is not a valid coding");
    }
    if (distinct_rows) {
        std::set<std::vector<double>> descriptions;
        for (Eigen::Index r = 0; r < rows_.rows(); ++r) {
            std::vector<double> key(rows_.cols());
            for (Eigen::Index c = 0; c < rows_.cols(); ++c) key[static_cast<std::size_t>(c)] = rows_(r, c);
            if (!descriptions.insert(std::move(key)).second)
                throw InvalidAttribute("categories must have pairwise distinct attribute rows (duplicate at id " +
                                       std::to_string(ids_[static_cast<std::size_t>(r)]) + ")");
        }
    }
}

bool FaultAttributeMatrix::contains(CategoryId id) const {
    return std::find(ids_.begin(), ids_.end(), id) != ids_.end();
}

std::size_t FaultAttributeMatrix::index_of(CategoryId id) const {
    const auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) throw ProtocolError("no attribute row for category " + std::to_string(id));
    return static_cast<std::size_t>(it - ids_.begin());
}

RowVector FaultAttributeMatrix::row(CategoryId id) const {
    return rows_.row(static_cast<Eigen::Index>(index_of(id)));
}

FaultAttributeMatrix FaultAttributeMatrix::rows_for(std::span<const CategoryId> ids) const {
    Matrix out(static_cast<Eigen::Index>(ids.size()), rows_.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = row(ids[i]);
    FaultAttributeMatrix sub;
    sub.schema_ = schema_;
    sub.ids_.assign(ids.begin(), ids.end());
    sub.rows_ = std::move(out);
    return sub;
}

FaultAttributeMatrix FaultAttributeMatrix::select_groups(std::span<const std::size_t> groups) const {
    AttributeSchema sub_schema = schema_.select(groups);
    Matrix out(rows_.rows(), sub_schema.coded_width());
    for (std::size_t i = 0; i < groups.size(); ++i)
        out.middleCols(sub_schema.offset(i), sub_schema.cardinality(i)) =
            rows_.middleCols(schema_.offset(groups[i]), schema_.cardinality(groups[i]));
    return FaultAttributeMatrix(std::move(sub_schema), ids_, std::move(out), false);
}

Matrix FaultAttributeMatrix::labels_for(std::span<const CategoryId> labels) const {
    Matrix z(static_cast<Eigen::Index>(labels.size()), rows_.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) z.row(static_cast<Eigen::Index>(i)) = row(labels[i]);
    return z;
}

bool FaultAttributeMatrix::operator==(const FaultAttributeMatrix& other) const {
    return schema_ == other.schema_ && ids_ == other.ids_ && rows_ == other.rows_;
}

void require_column_extension(const FaultAttributeMatrix& prev, const FaultAttributeMatrix& next) {
    if (prev.ids() != next.ids()) throw ProtocolError("attribute extension must keep the same categories");
    if (next.matrix().cols() < prev.matrix().cols())
        throw ProtocolError("attribute extension may not remove columns");
    const auto& pc = prev.schema().cardinalities();
    const auto& nc = next.schema().cardinalities();
    if (nc.size() < pc.size() || !std::equal(pc.begin(), pc.end(), nc.begin()))
        throw ProtocolError("attribute extension must keep the previous groups as a prefix");
    if (next.matrix().leftCols(prev.matrix().cols()) != prev.matrix())
        throw ProtocolError("attribute extension changed existing columns");
}

}  // namespace izsfd
