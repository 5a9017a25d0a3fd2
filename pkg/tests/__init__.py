# -*- coding: utf-8 -*-
"""BEC Toolkit - Tests Package"""
