"""Exception types shared across the package."""


class CoincidentFacilities(ValueError):
    """Bisector requested for two coordinate-identical points."""


class QueryOutsideDomain(ValueError):
    """Query point lies outside the domain rectangle."""


class StaleZone(RuntimeError):
    """Zone queried after a conservative freeze invalidated it."""


class InvalidQueryIndex(IndexError):
    """Query index outside the facility array."""


class EmptyFacilitySet(ValueError):
    """Operation requires at least one facility."""


class SpecTooLarge(ValueError):
    """Split requests more facilities than the dataset holds."""


class MalformedLine(ValueError):
    """Unparseable line in a coordinate file."""

    def __init__(self, line_no: int, text: str):
        super().__init__(f"line {line_no}: {text!r}")
        self.line_no = line_no
        self.text = text


class CountMismatch(ValueError):
    """Vertex count differs from the header's declared count."""


class MissingHeader(ValueError):
    """Reserved: header absence is tolerated, count is inferred."""
