#!/usr/bin/env python3
"""
Multi-advertiser seed allocation toolkit.
Greedy, local-search, LP-rounding and heuristic allocators over Independent Cascade networks.
"""

import logging
import sys
import os

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from utils.commands import CommandManager
from utils.errors import CampaignError

logger = logging.getLogger('main')


def main(argv=None) -> int:
    """Main entry point; returns the process exit status."""
    manager = CommandManager()
    args = manager.parse(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )

    try:
        output = manager.execute(args)
    except CampaignError as e:
        logger.error("%s", e)
        return 2

    if output:
        print(output.rstrip('\n'))
    return 0


if __name__ == "__main__":
    sys.exit(main())
