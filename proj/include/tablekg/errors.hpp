#pragma once

#include <stdexcept>
#include <string>

namespace tkg {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define TKG_DEFINE_ERROR(Name)                 \
  struct Name : Error {                        \
    using Error::Error;                        \
  }

// geometry
TKG_DEFINE_ERROR(NonConvexClip);
TKG_DEFINE_ERROR(ZeroAreaLine);

// pagexml
TKG_DEFINE_ERROR(MalformedXml);
TKG_DEFINE_ERROR(MissingCoords);
TKG_DEFINE_ERROR(DuplicateId);

// table model
TKG_DEFINE_ERROR(NoTable);
TKG_DEFINE_ERROR(OverlappingCells);
TKG_DEFINE_ERROR(RowOutOfRange);

// extraction
TKG_DEFINE_ERROR(BackendFailure);
TKG_DEFINE_ERROR(InvalidPattern);

// rdf / kg construction
TKG_DEFINE_ERROR(InvalidIri);
TKG_DEFINE_ERROR(SchemaViolation);
TKG_DEFINE_ERROR(UnknownCell);

// shacl
TKG_DEFINE_ERROR(MalformedShapes);
TKG_DEFINE_ERROR(UnsupportedConstraint);

#undef TKG_DEFINE_ERROR

}  // namespace tkg
