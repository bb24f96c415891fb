"""empty init"""
