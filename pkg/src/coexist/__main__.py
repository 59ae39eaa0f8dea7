"""
Entrypoint module, in case you use ``python -m coexist``.
"""
from coexist.cli.commands import main

if __name__ == "__main__":
    main()
