#pragma once

// Attribute coding. A raw fault description is a tuple of beta attribute
// values; attribute i takes one of alpha_i values and is one-hot coded into a
// group of alpha_i columns. Groups are laid out consecutively, so the coded
// width is m = sum(alpha_i).

#include "izsfd/linalg.hpp"

#include <span>
#include <vector>

namespace izsfd {

using CategoryId = int;

class AttributeSchema {
public:
    AttributeSchema() = default;
    explicit AttributeSchema(std::vector<Eigen::Index> cardinalities);

    std::size_t group_count() const { return cardinalities_.size(); }
    Eigen::Index coded_width() const { return width_; }
    const std::vector<Eigen::Index>& cardinalities() const { return cardinalities_; }
    Eigen::Index cardinality(std::size_t group) const { return cardinalities_.at(group); }
    Eigen::Index offset(std::size_t group) const { return offsets_.at(group); }
    const std::vector<Eigen::Index>& offsets() const { return offsets_; }

    // Schema made of the listed groups, in the listed order.
    AttributeSchema select(std::span<const std::size_t> groups) const;

    bool operator==(const AttributeSchema&) const = default;

private:
    std::vector<Eigen::Index> cardinalities_;
    std::vector<Eigen::Index> offsets_;
    Eigen::Index width_ = 0;
};

RowVector encode_attributes(std::span<const int> raw, const AttributeSchema& schema);

// Inverse of encode_attributes; throws InvalidAttribute on a malformed row.
std::vector<int> decode_attributes(const RowVector& coded, const AttributeSchema& schema);

// True when every group of `row` is exactly one-hot.
bool is_valid_coding(const RowVector& row, const AttributeSchema& schema);

// Class-level attribute descriptions: one coded row per category.
class FaultAttributeMatrix {
public:
    FaultAttributeMatrix() = default;

    // Validates each row against the schema, ids for uniqueness, and (when
    // `distinct_rows` is set) that no two categories share a description.
    FaultAttributeMatrix(AttributeSchema schema, std::vector<CategoryId> ids, Matrix rows,
                         bool distinct_rows = true);

    const AttributeSchema& schema() const { return schema_; }
    const std::vector<CategoryId>& ids() const { return ids_; }
    const Matrix& matrix() const { return rows_; }
    std::size_t size() const { return ids_.size(); }
    bool contains(CategoryId id) const;
    std::size_t index_of(CategoryId id) const;
    RowVector row(CategoryId id) const;

    // Rows for `ids`, in that order. Throws ProtocolError for unknown ids.
    FaultAttributeMatrix rows_for(std::span<const CategoryId> ids) const;

    // Column projection onto the listed groups. Projected descriptions may
    // coincide, so the distinct-row check is not applied.
    FaultAttributeMatrix select_groups(std::span<const std::size_t> groups) const;

    // Attribute label matrix Z for a label sequence.
    Matrix labels_for(std::span<const CategoryId> labels) const;

    bool operator==(const FaultAttributeMatrix& other) const;

private:
    AttributeSchema schema_;
    std::vector<CategoryId> ids_;
    Matrix rows_;
};

// Checks that `next` equals `prev` with columns appended (same categories in
// the same order, leading columns identical). Throws ProtocolError otherwise.
void require_column_extension(const FaultAttributeMatrix& prev, const FaultAttributeMatrix& next);

}  // namespace izsfd
