"""Shared exception types."""


class ToolkitError(Exception):
    """Base class for errors raised by pcarank."""


class FormatError(ToolkitError, ValueError):
    """A file did not match its expected on-disk format.

    Messages carry a byte offset (binary files) or line number (text files)
    so the offending location can be found without a debugger.
    """
