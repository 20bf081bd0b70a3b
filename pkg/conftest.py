import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "risioi.settings")
django.setup()
