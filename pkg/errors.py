"""
Exception hierarchy for CorridorTheta

Every failure the planners and the scenario layer can raise carries a stable
``code`` so the command line can emit structured diagnostics.
"""

from config import get_error_message


class CorridorThetaError(Exception):
    """Base class for all CorridorTheta errors"""

    code = 'error'

    def __init__(self, message=None, **context):
        self.context = context
        super().__init__(message or get_error_message(self.code, **context))

    def to_dict(self):
        """Structured diagnostic for stderr"""
        payload = {'error': self.code, 'message': str(self)}
        for key, value in self.context.items():
            payload[key] = value if isinstance(value, (str, int, float, bool, type(None))) else str(value)
        return payload


class DegenerateSegment(CorridorThetaError):
    code = 'degenerate_segment'


class InvalidPolyline(CorridorThetaError):
    code = 'invalid_polyline'


class InfeasibleEndpoints(CorridorThetaError):
    code = 'infeasible_endpoints'


class MalformedPath(CorridorThetaError):
    code = 'malformed_path'


class OracleExhausted(CorridorThetaError):
    code = 'oracle_exhausted'


class OracleBoundExceeded(CorridorThetaError):
    code = 'oracle_bound_exceeded'


class InvalidConstraints(CorridorThetaError):
    code = 'invalid_constraints'


class ParseError(CorridorThetaError):
    """Scenario schema violation, reported with the offending field path"""

    code = 'parse_error'

    def __init__(self, field, reason):
        self.field = field
        super().__init__(field=field, reason=reason)
