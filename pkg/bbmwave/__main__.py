"""Permite `python -m bbmwave <experimento> --config <archivo>`."""

import sys

from bbmwave.main import main

sys.exit(main())
