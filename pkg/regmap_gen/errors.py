# Exception hierarchy; every error can point at a source location


class RegmapError(Exception):

    def __init__(self, message, path=None, line=None, col=None):
        super().__init__(message)
        self.message = message
        self.path = path
        self.line = line
        self.col = col

    @property
    def location(self):
        if self.path is None:
            return ""
        if self.line is None:
            return str(self.path)
        return f"{self.path}:{self.line}:{self.col or 1}"

    def __str__(self):
        loc = self.location
        return f"{loc}: {self.message}" if loc else self.message


class VerilogSyntaxError(RegmapError):
    pass


class VerilogLexError(VerilogSyntaxError):
    pass


class ResolveError(RegmapError):
    pass


class UnresolvedModuleError(ResolveError):
    pass


class AmbiguousModuleError(ResolveError):
    pass


class InstantiationCycleError(ResolveError):
    pass


class NameCollisionError(RegmapError):
    pass


class RegisterSpecError(RegmapError):
    pass


class AllocationError(RegmapError):
    pass


class DecoderError(RegmapError):
    pass


class VerificationError(RegmapError):
    pass


# Bad command line or RunConfig; maps to exit code 2
class UsageError(RegmapError):
    pass
