from .cli_io import entry

entry()
