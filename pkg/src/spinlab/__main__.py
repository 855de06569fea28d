from .scli.main import main

raise SystemExit(main())
