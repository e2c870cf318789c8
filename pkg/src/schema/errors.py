class LdaAuditError(Exception):
    """Base class for every error raised by the toolkit."""


class EmptyPopulationError(LdaAuditError):
    def __init__(self, message="empty population"):
        self.message = message
        super().__init__(message)


class DegenerateLabelsError(LdaAuditError):
    """Raised when a population has no positives or no negatives."""

    def __init__(self, n_pos, n_neg, message="degenerate labels"):
        self.n_pos = n_pos
        self.n_neg = n_neg
        self.message = message
        super().__init__(f"{message}: n_+ = {n_pos}, n_- = {n_neg}")


class EmptyGroupError(LdaAuditError):
    def __init__(self, group, message="group has no members"):
        self.group = group
        self.message = message
        super().__init__(f"{message}: group {group}")


class IdenticalApplicantError(LdaAuditError):
    """Raised when one applicant appears twice, breaking 'no two applicants are identical'."""

    def __init__(self, features, message="identicality assumption violated"):
        self.features = features
        self.message = message
        super().__init__(f"{message}: applicant {features} appears more than once")


class GridTooLargeError(LdaAuditError):
    def __init__(self, required_cap, cap, message="grid too large"):
        self.required_cap = required_cap
        self.cap = cap
        self.message = message
        super().__init__(f"{message}: needs cap >= {required_cap}, got {cap}")


class BaseRateOrientationError(LdaAuditError):
    def __init__(self, br_1, br_2):
        self.br_1 = br_1
        self.br_2 = br_2
        super().__init__(
            f"group 1 must have the higher base rate (BR_1 = {br_1}, BR_2 = {br_2}); "
            "relabel groups first"
        )


class UtilityUnachievableError(LdaAuditError):
    def __init__(self, u0, message="utility unachievable"):
        self.u0 = u0
        self.message = message
        super().__init__(f"{message}: {u0} > 1")


class InvalidInstanceError(LdaAuditError):
    pass


class InstanceTooLargeError(LdaAuditError):
    def __init__(self, cells, cap, message="instance too large for exact solve"):
        self.cells = cells
        self.cap = cap
        self.message = message
        super().__init__(f"{message}: {cells} DP cells exceed the cap of {cap}")


class SolveTimeoutError(LdaAuditError):
    def __init__(self, limit_s):
        self.limit_s = limit_s
        super().__init__(f"solve exceeded its time limit of {limit_s}s")


class InvalidParameterError(LdaAuditError):
    def __init__(self, name, value, message="invalid parameter"):
        self.name = name
        self.value = value
        self.message = message
        super().__init__(f"{message}: {name} = {value}")


class SolverConsistencyError(LdaAuditError):
    """A solver returned something its own contract rules out."""


class InstanceGenerationError(LdaAuditError):
    def __init__(self, n_options, max_digits, retries):
        self.n_options = n_options
        self.max_digits = max_digits
        self.retries = retries
        super().__init__(
            f"could not round densities for n_options={n_options}, "
            f"max_digits={max_digits} after {retries} attempts"
        )


class NoPositiveInstancesError(LdaAuditError):
    def __init__(self, message="no positive instances"):
        self.message = message
        super().__init__(message)


class BenchmarkConsistencyError(LdaAuditError):
    pass


class DegenerateSplitError(LdaAuditError):
    def __init__(self, split_name, missing, message="degenerate split"):
        self.split_name = split_name
        self.missing = missing
        self.message = message
        super().__init__(f"{message}: {split_name} split has no {missing}")


class NonFiniteFeaturesError(LdaAuditError):
    def __init__(self, count):
        self.count = count
        super().__init__(f"features contain {count} non-finite values")


class InvalidSearchTypeError(LdaAuditError):
    def __init__(self, kind, search_type):
        self.kind = kind
        self.search_type = search_type
        super().__init__(
            f"search type {search_type.value} is only defined for random_forest, "
            f"got {kind.value}"
        )


class TrialSizeError(LdaAuditError):
    def __init__(self, n, pool_size):
        self.n = n
        self.pool_size = pool_size
        super().__init__(f"trial size n = {n} must lie in [1, {pool_size}]")


class MissingColumnError(LdaAuditError):
    def __init__(self, column, path):
        self.column = column
        self.path = path
        super().__init__(f"column '{column}' missing from {path}")


class NoUsableRowsError(LdaAuditError):
    def __init__(self, path, dropped):
        self.path = path
        self.dropped = dropped
        super().__init__(f"no usable rows in {path} ({dropped} dropped)")


class InfeasibleBaseRatesError(LdaAuditError):
    def __init__(self, base_rates):
        self.base_rates = base_rates
        super().__init__(f"base rates must lie in [0, 1], got {base_rates}")


class InstanceFormatError(LdaAuditError):
    def __init__(self, path, line, reason):
        self.path = path
        self.line = line
        self.reason = reason
        super().__init__(f"{path}, line {line}: {reason}")


class UsageError(LdaAuditError):
    """Bad command-line usage."""


class EmptySweepError(LdaAuditError):
    def __init__(self, message="no trial statistics to summarize"):
        self.message = message
        super().__init__(message)
