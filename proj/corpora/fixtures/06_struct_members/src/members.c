typedef unsigned long size_t;
typedef struct _IO_FILE FILE;
extern FILE *fopen(const char *path, const char *mode);
extern int fclose(FILE *stream);
extern size_t fread(void *ptr, size_t size, size_t n, FILE *stream);
extern int printf(const char *format, ...);
extern void exit(int status) __attribute__((__noreturn__));
extern void *memcpy(void *dest, const void *src, size_t n);
extern void *memset(void *s, int c, size_t n);

static int checksum(const char *p, int n) {
  int sum = 0;
  int i;
  for (i = 0; i < n; i++)
    sum = sum + p[i];
  return sum;
}

struct header {
  int len;
  int flags;
};

void process(FILE *f) {
  struct header h;
  char src[512];
  char dst[128];
  memset(src, 's', sizeof(src));
  h.len = 0;
  h.flags = 16;
  fread(&h.len, sizeof(int), 1, f);
  if (h.len > 128) {
    printf("bad header\n");
    exit(1);
  }
  memcpy(dst, src, h.len);
  printf("len %d sum %d\n", h.len, checksum(dst, h.len));
  memcpy(dst, src, h.flags);
  printf("flags %d\n", h.flags);
}

int main(int argc, char **argv) {
  FILE *f;
  if (argc < 2)
    return 2;
  f = fopen(argv[1], "rb");
  if (!f)
    return 2;
  process(f);
  fclose(f);
  return 0;
}
