"""Exceptions raised across the cellfree package."""


class CellFreeError(Exception):
    """Base class for every error the simulator raises on purpose."""


class ConfigError(CellFreeError, ValueError):
    """Invalid configuration value or scenario file entry."""

    def __init__(self, message, key_path=None, line=None, source=None):
        self.detail = message
        self.key_path = key_path
        self.line = line
        self.source = source
        where = []
        if source is not None:
            where.append(str(source))
        if line is not None:
            where.append(str(line))
        prefix = ':'.join(where)
        if key_path:
            message = '{}: {}'.format(key_path, message)
        if prefix:
            message = '{}: {}'.format(prefix, message)
        super().__init__(message)


class ZeroChannel(CellFreeError):
    """A user's channel is identically zero where a solver needs it nonzero."""

    def __init__(self, user, ap=None):
        self.user = user
        self.ap = ap
        if ap is None:
            msg = 'stacked channel of user {} is identically zero'.format(user)
        else:
            msg = 'channel of user {} at AP {} is identically zero'.format(user, ap)
        super().__init__(msg)


class SolverFailure(CellFreeError):
    """A local conic subproblem did not reach an optimal solution."""

    def __init__(self, ap, status, iteration=None, diagnostic=None):
        self.ap = ap
        self.status = status
        self.iteration = iteration
        self.diagnostic = dict(diagnostic or {})
        msg = 'AP {} subproblem ended with status {}'.format(ap, getattr(status, 'value', status))
        if iteration is not None:
            msg += ' at iteration {}'.format(iteration)
        super().__init__(msg)

    def at_iteration(self, iteration):
        return SolverFailure(self.ap, self.status, iteration, self.diagnostic)


class MissingReport(CellFreeError):
    """The central node received fewer interference reports than APs."""

    def __init__(self, ap, iteration=None):
        self.ap = ap
        self.iteration = iteration
        msg = 'no interference report from AP {}'.format(ap)
        if iteration is not None:
            msg += ' in iteration {}'.format(iteration)
        super().__init__(msg)


class EnsembleAborted(CellFreeError):
    """Too many realizations of an ensemble failed."""

    def __init__(self, failures, total):
        self.failures = list(failures)
        self.total = total
        super().__init__('{} of {} realizations failed'.format(len(self.failures), total))
