"""Exception hierarchy shared by all lanekit modules.

``ValidationError`` subclasses signal bad data or arguments (CLI exit code 1),
``ParseError`` subclasses signal broken input files (CLI exit code 2).
"""


class LaneKitError(Exception):
    pass


class ValidationError(LaneKitError):
    pass


class ParseError(LaneKitError):
    """Malformed input document; the message carries the location."""


# --- graph construction / operations -------------------------------------

class DuplicateNodeId(ValidationError):
    def __init__(self, node_id):
        super().__init__(f"duplicate node id {node_id}")
        self.node_id = node_id


class DuplicateEdge(ValidationError):
    def __init__(self, src, dst):
        super().__init__(f"duplicate edge ({src}, {dst})")
        self.src, self.dst = src, dst


class DanglingEdge(ValidationError):
    def __init__(self, node_id):
        super().__init__(f"edge references unknown node id {node_id}")
        self.node_id = node_id


class SelfLoop(ValidationError):
    def __init__(self, node_id):
        super().__init__(f"self-loop on node id {node_id}")
        self.node_id = node_id


class OutOfFrame(ValidationError):
    def __init__(self, what, frame=None):
        msg = f"{what} lies outside the frame"
        if frame is not None:
            msg += f" {frame}"
        super().__init__(msg)


class NonPositiveSpacing(ValidationError):
    pass


class UnknownNode(ValidationError):
    def __init__(self, node_id):
        super().__init__(f"unknown node id {node_id}")
        self.node_id = node_id


# --- rasters ---------------------------------------------------------------

class EmptyFrame(ValidationError):
    pass


class NonPositiveCell(ValidationError):
    pass


class OutOfBounds(ValidationError):
    pass


class BadMagic(ParseError):
    pass


class TruncatedFile(ParseError):
    pass


class UnknownDtype(ParseError):
    def __init__(self, code):
        super().__init__(f"unknown channel dtype code {code}")
        self.code = code


# --- projection / adaptation ----------------------------------------------

class DegenerateSegment(ValidationError):
    pass


class EmptyGraph(ValidationError):
    pass


# --- direction field --------------------------------------------------------

class BackgroundClass(ValidationError):
    pass


class EmptyList(ValidationError):
    pass


class MeanUndefined(ValidationError):
    pass


class BackgroundAtAnchor(ValidationError):
    def __init__(self, point):
        super().__init__(f"direction field is background at anchor {point}")
        self.point = point


class DirectionAmbiguous(ValidationError):
    pass


# --- metrics -----------------------------------------------------------------

class EmptyGroundTruth(ValidationError):
    pass


class EmptySet(ValidationError):
    pass


class FrameMismatch(ValidationError):
    pass


# --- estimators ---------------------------------------------------------------

class TooFewAnchors(ValidationError):
    pass


class DanglingConnection(ValidationError):
    def __init__(self, anchor_id):
        super().__init__(f"connection references unknown anchor id {anchor_id}")
        self.anchor_id = anchor_id


# --- synthetic scenes -----------------------------------------------------------

class InvalidSpec(ValidationError):
    pass
